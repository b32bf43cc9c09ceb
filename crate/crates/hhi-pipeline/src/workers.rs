//! A bounded worker pool for pure per-item stages.
//!
//! Items are chunked by index and results land in input order, so parallel
//! runs are byte-identical to sequential ones.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Applies `f` to every item using up to `workers` threads, preserving input
/// order. `f` must be pure; the first error wins and is returned.
pub fn ordered_map<T, R, E, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<R, E>>>> =
        items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(items.len()) {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= items.len() {
                    break;
                }
                let result = f(&items[index]);
                *results[index].lock().expect("worker poisoned") = Some(result);
            });
        }
    });
    let mut out = Vec::with_capacity(items.len());
    for slot in results {
        match slot.into_inner().expect("worker poisoned") {
            Some(Ok(value)) => out.push(value),
            Some(Err(error)) => return Err(error),
            None => unreachable!("every index visited"),
        }
    }
    Ok(out)
}
