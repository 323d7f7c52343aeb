use std::num::NonZeroUsize;
use std::sync::Arc;
use std::time::SystemTime;

use lru::LruCache;
use rand::Rng;
use tokio::sync::Mutex;
use ukiyo_core::color::LayerStack;
use ukiyo_core::RgbRaster;

/// One decomposed upload. Never mutated after creation.
#[derive(Debug)]
pub struct Session {
    pub source: RgbRaster,
    pub stack: LayerStack,
    pub lambda: f64,
    pub seed: u64,
    pub created: SystemTime,
}

/// In-memory sessions keyed by random hex ids, least recently used first
/// out.
pub struct SessionStore {
    sessions: Mutex<LruCache<String, Arc<Session>>>,
}

impl SessionStore {
    pub fn new(capacity: NonZeroUsize) -> Self {
        Self { sessions: Mutex::new(LruCache::new(capacity)) }
    }

    pub async fn insert(&self, session: Session) -> String {
        let id = new_session_id();
        self.sessions.lock().await.put(id.clone(), Arc::new(session));
        id
    }

    pub async fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.lock().await.get(id).cloned()
    }

    pub async fn len(&self) -> usize {
        self.sessions.lock().await.len()
    }

    pub async fn is_empty(&self) -> bool {
        self.sessions.lock().await.is_empty()
    }
}

// 128 bits from the thread-local CSPRNG.
fn new_session_id() -> String {
    format!("{:032x}", rand::rng().random::<u128>())
}
