use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::{Resolution, Resolver};

/// Memoizing wrapper: each distinct URI reaches the inner resolver once,
/// even under concurrent lookups of the same URI.
#[derive(Debug)]
pub struct CachedResolver<R> {
    inner: R,
    entries: Mutex<HashMap<String, Arc<OnceLock<Resolution>>>>,
}

impl<R: Resolver> CachedResolver<R> {
    pub fn new(inner: R) -> Self {
        CachedResolver {
            inner,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &R {
        &self.inner
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<R: Resolver> Resolver for CachedResolver<R> {
    fn resolve(&self, uri: &str) -> Resolution {
        let cell = {
            let mut map = self.entries.lock().unwrap();
            Arc::clone(map.entry(uri.to_owned()).or_default())
        };
        cell.get_or_init(|| self.inner.resolve(uri)).clone()
    }

    fn max_redirects(&self) -> usize {
        self.inner.max_redirects()
    }
}
