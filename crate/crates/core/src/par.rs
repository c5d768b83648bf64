//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature, work runs on a rayon pool whose size is capped
//! by the `CONJKIT_THREADS` environment variable. Results are always returned
//! in input order, so output does not depend on the worker count.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Execution {
    /// Parallel when compiled in and `CONJKIT_THREADS` is not `1`.
    pub fn from_env() -> Self {
        if cfg!(feature = "parallel") && thread_cap() != Some(1) {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Default for Execution {
    fn default() -> Self {
        Execution::from_env()
    }
}

/// Value of `CONJKIT_THREADS` when it is a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("CONJKIT_THREADS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap() {
            b = b.num_threads(n);
        }
        b.build().expect("thread pool")
    })
}

/// `f(0), …, f(n-1)` in order.
pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            pool().install(|| (0..n).into_par_iter().map(f).collect())
        }
        _ => (0..n).map(f).collect(),
    }
}

/// `f` applied to each item, in order.
pub fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_range(exec, items.len(), |i| f(&items[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_range(Execution::Sequential, 1000, |i| i * i);
        let par = map_range(Execution::Parallel, 1000, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(map_slice(Execution::Parallel, &[3, 1, 2], |x| x + 1), vec![4, 2, 3]);
    }
}
