//! Order-preserving data-parallel map. With the `parallel` feature the work
//! runs on a rayon pool sized by `workers`; without it, or with one worker,
//! it is a plain sequential map. Output order never depends on `workers`.

#[cfg(feature = "parallel")]
mod imp {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    use rayon::prelude::*;

    fn pool(workers: usize) -> Arc<rayon::ThreadPool> {
        static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
        let mut pools = POOLS.get_or_init(Default::default).lock().expect("pool registry");
        pools
            .entry(workers)
            .or_insert_with(|| {
                Arc::new(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .thread_name(|i| format!("flutes-worker-{i}"))
                        .build()
                        .expect("thread pool"),
                )
            })
            .clone()
    }

    pub fn map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        if workers <= 1 || items.len() < 2 {
            return items.iter().map(f).collect();
        }
        pool(workers).install(|| items.par_iter().map(f).collect())
    }

    pub fn available() -> usize {
        rayon::current_num_threads()
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn map<T, R, F>(_workers: usize, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.iter().map(f).collect()
    }

    pub fn available() -> usize {
        1
    }
}

pub use imp::{available, map};

#[cfg(test)]
mod tests {
    #[test]
    fn order_is_preserved() {
        let items: Vec<u32> = (0..1000).collect();
        let seq = super::map(1, &items, |x| x * 3);
        let par = super::map(4, &items, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 2997);
    }
}
