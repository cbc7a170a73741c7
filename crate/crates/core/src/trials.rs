//! Independent randomized trials, run on the rayon pool when the `parallel`
//! feature is on and in a plain loop otherwise. Output order is the trial
//! index order either way.

/// Runs `f(0), ..., f(count - 1)` one after another.
pub fn run_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// Runs the trials on the rayon thread pool.
#[cfg(feature = "parallel")]
pub fn run_parallel<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// Dispatches to [`run_parallel`] or [`run_sequential`] by feature.
pub fn run_trials<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        run_parallel(count, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sequential(count, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        let out = run_trials(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
        assert_eq!(run_sequential(3, |i| i), vec![0, 1, 2]);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(run_parallel(257, f), run_sequential(257, f));
    }
}
