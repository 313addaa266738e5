//! Order-preserving parallel map.

use std::collections::BTreeMap;
use std::thread;

use crossbeam_channel::{bounded, unbounded};

/// Records allowed in flight per worker.
pub const WINDOW_PER_WORKER: usize = 4;

/// Applies `work` to every input item on `workers` threads and feeds results
/// to `sink` in input order.
///
/// A producer thread pulls from `input`, a pool of workers runs `work`, and
/// the calling thread reorders results before handing them to `sink`. At most
/// `workers * WINDOW_PER_WORKER` items are in flight (queued, being worked on,
/// or waiting in the reorder buffer). The first `sink` error stops the run.
/// With one worker everything runs on the calling thread.
pub fn map_ordered<T, R, E, I, W, S>(input: I, workers: usize, work: W, mut sink: S) -> Result<(), E>
where
    T: Send,
    R: Send,
    I: Iterator<Item = T> + Send,
    W: Fn(T) -> R + Sync,
    S: FnMut(R) -> Result<(), E>,
{
    let workers = workers.max(1);
    if workers == 1 {
        for item in input {
            sink(work(item))?;
        }
        return Ok(());
    }
    let window = workers * WINDOW_PER_WORKER;
    let (credit_tx, credit_rx) = bounded::<()>(window);
    for _ in 0..window {
        credit_tx.send(()).expect("receiver alive");
    }
    let (job_tx, job_rx) = bounded::<(usize, T)>(window);
    let (res_tx, res_rx) = unbounded::<(usize, R)>();
    let work = &work;

    thread::scope(|scope| {
        scope.spawn(move || {
            for (seq, item) in input.enumerate() {
                if credit_rx.recv().is_err() || job_tx.send((seq, item)).is_err() {
                    break;
                }
            }
        });
        for _ in 0..workers {
            let job_rx = job_rx.clone();
            let res_tx = res_tx.clone();
            scope.spawn(move || {
                for (seq, item) in job_rx {
                    if res_tx.send((seq, work(item))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(job_rx);
        drop(res_tx);

        let mut pending: BTreeMap<usize, R> = BTreeMap::new();
        let mut next = 0;
        let mut outcome = Ok(());
        'recv: for (seq, result) in res_rx.iter() {
            pending.insert(seq, result);
            while let Some(result) = pending.remove(&next) {
                next += 1;
                if let Err(e) = sink(result) {
                    outcome = Err(e);
                    break 'recv;
                }
                // The producer may already have finished; a closed channel is fine.
                let _ = credit_tx.try_send(());
            }
        }
        // Unblocks the producer and lets the workers drain.
        drop(credit_tx);
        drop(res_rx);
        outcome
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn preserves_order() {
        for workers in [1, 2, 8] {
            let mut out = Vec::new();
            map_ordered(
                0..500u64,
                workers,
                |i| {
                    if i % 7 == 0 {
                        std::thread::sleep(std::time::Duration::from_micros(200));
                    }
                    i * i
                },
                |r| {
                    out.push(r);
                    Ok::<_, ()>(())
                },
            )
            .unwrap();
            assert_eq!(out, (0..500u64).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    #[test]
    fn sink_error_stops_early() {
        let pulled = AtomicUsize::new(0);
        let input = (0..100_000).inspect(|_| {
            pulled.fetch_add(1, Ordering::Relaxed);
        });
        let mut seen = 0;
        let res = map_ordered(input, 4, |i| i, |i| {
            seen += 1;
            if i == 10 { Err(i) } else { Ok(()) }
        });
        assert_eq!(res, Err(10));
        assert_eq!(seen, 11);
        assert!(pulled.load(Ordering::Relaxed) <= 11 + 4 * WINDOW_PER_WORKER + 1);
    }

    #[test]
    fn in_flight_is_bounded() {
        let started = AtomicUsize::new(0);
        let mut max_gap = 0;
        let mut done = 0;
        map_ordered(
            0..2000,
            3,
            |i| {
                started.fetch_add(1, Ordering::SeqCst);
                i
            },
            |_| {
                done += 1;
                max_gap = max_gap.max(started.load(Ordering::SeqCst) - done);
                Ok::<_, ()>(())
            },
        )
        .unwrap();
        assert!(max_gap <= 3 * WINDOW_PER_WORKER, "{max_gap}");
    }
}
