//! Replication harness.
//!
//! Replication `r` always runs on stream `r` of the master seed, and results
//! come back in replication order, so any reduction done by the caller is
//! independent of the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

/// How many replications to run, from which seed, on how many threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Replication {
    pub reps: u64,
    pub seed: u64,
    /// Worker threads; `0` uses the global rayon pool.
    pub workers: usize,
}

impl Replication {
    pub fn new(reps: u64, seed: u64) -> Self {
        Self {
            reps,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Runs `f` once per replication and returns the results in order.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &mut StreamRng) -> Result<T> + Sync,
    {
        let seed = self.seed;
        self.install(|| {
            (0..self.reps)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream_rng(seed, r);
                    f(r, &mut rng)
                })
                .collect()
        })
    }

    /// Like [`map`](Self::map), but hands `f` consecutive groups of up to
    /// `batch` replications together with their streams. `f` must return one
    /// result per stream. Grouping depends only on `batch`, never on the
    /// worker count.
    pub fn map_batched<T, F>(&self, batch: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &mut [StreamRng]) -> Result<Vec<T>> + Sync,
    {
        let batch = batch.max(1) as u64;
        let seed = self.seed;
        let groups = self.reps.div_ceil(batch);
        let nested: Vec<Vec<T>> = self.install(|| {
            (0..groups)
                .into_par_iter()
                .map(|g| {
                    let first = g * batch;
                    let last = (first + batch).min(self.reps);
                    let mut rngs: Vec<StreamRng> =
                        (first..last).map(|r| stream_rng(seed, r)).collect();
                    let out = f(first, &mut rngs)?;
                    if out.len() != rngs.len() {
                        return Err(Error::Invariant(format!(
                            "batch returned {} results for {} replications",
                            out.len(),
                            rngs.len()
                        )));
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(nested.into_iter().flatten().collect())
    }

    fn install<T: Send>(&self, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        if self.workers == 0 {
            job()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
                .install(job)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::uniform;

    #[test]
    fn results_do_not_depend_on_workers() {
        let draw = |_: u64, rng: &mut StreamRng| Ok((0..10).map(|_| uniform(rng)).sum::<f64>());
        let one = Replication::new(64, 5).with_workers(1).map(draw).unwrap();
        let three = Replication::new(64, 5).with_workers(3).map(draw).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn batched_matches_unbatched() {
        let draw = |_: u64, rng: &mut StreamRng| Ok(uniform(rng));
        let plain = Replication::new(10, 9).map(draw).unwrap();
        let batched = Replication::new(10, 9)
            .with_workers(2)
            .map_batched(4, |_, rngs| Ok(rngs.iter_mut().map(uniform).collect()))
            .unwrap();
        assert_eq!(plain, batched);
    }

    #[test]
    fn errors_propagate() {
        let out = Replication::new(8, 1).map(|r, _| {
            if r == 5 {
                Err(Error::Invariant("boom".into()))
            } else {
                Ok(r)
            }
        });
        assert!(matches!(out, Err(Error::Invariant(_))));
    }
}
