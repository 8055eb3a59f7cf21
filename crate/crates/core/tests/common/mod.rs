#![allow(dead_code)]

pub mod gen;

use flutes::benchgen::{define_base_schema, fi_related_type};
use flutes::engine::Engine;

pub const CORPUS: &str = r#"
joe := {"name"="Joe", "birth_date"="1984-06-27"};
sue := {"name"="Sue", "dob"="1941-12-07"};
t1 := {"amount" = 500.0, "type"=check()};
o1 := orig-of(joe, t1);
r1 := recv-of(sue, t1);
"#;

pub const SUE_GRAFTON: &str = r#"
   sue_grafton := {"name" : "Sue Grafton",
                   "dob" : "1941-12-07",
                   "birth-place" = Kentucky};
"#;

/// The five-term corpus with person, trans, orig_of, recv_of and
/// fi_related declared, not yet classified.
pub fn worked_example() -> Engine {
    let mut e = Engine::in_memory();
    load_worked_example(&mut e);
    e
}

pub fn load_worked_example(e: &mut Engine) {
    e.load_str(CORPUS).unwrap();
    define_base_schema(e).unwrap();
    e.mk_kb_class("fi_related", fi_related_type()).unwrap();
}
