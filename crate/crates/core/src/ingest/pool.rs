//! Bounded fan-out of blocking jobs with a per-endpoint in-flight cap.

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Condvar, Mutex};
use std::thread;

/// At most this many requests are in flight against one endpoint.
pub const PER_ENDPOINT_CONCURRENCY: usize = 2;

struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            permits: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.cv.wait(permits).unwrap();
        }
        *permits -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

/// Runs `f` over every job. Jobs sharing an endpoint key run at most
/// [`PER_ENDPOINT_CONCURRENCY`] at a time; at most `global` run overall.
/// Results come back in input order regardless of completion order.
pub fn fan_out<T, R, F>(jobs: Vec<(String, T)>, global: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let n = jobs.len();
    if n == 0 {
        return Vec::new();
    }
    if global <= 1 || n == 1 {
        return jobs.into_iter().map(|(_, job)| f(job)).collect();
    }

    let mut queues: BTreeMap<String, VecDeque<(usize, T)>> = BTreeMap::new();
    for (i, (endpoint, job)) in jobs.into_iter().enumerate() {
        queues.entry(endpoint).or_default().push_back((i, job));
    }
    let semaphore = Semaphore::new(global);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..n).map(|_| None).collect());
    let queues: Vec<(usize, Mutex<VecDeque<(usize, T)>>)> = queues
        .into_values()
        .map(|q| (q.len(), Mutex::new(q)))
        .collect();

    thread::scope(|scope| {
        for (len, queue) in &queues {
            for _ in 0..PER_ENDPOINT_CONCURRENCY.min(*len) {
                scope.spawn(|| loop {
                    let Some((i, job)) = queue.lock().unwrap().pop_front() else {
                        break;
                    };
                    let _permit = semaphore.acquire();
                    let r = f(job);
                    results.lock().unwrap()[i] = Some(r);
                });
            }
        }
    });

    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}
