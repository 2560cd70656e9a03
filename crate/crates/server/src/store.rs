use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use cubecut::volume::{Mask, Volume};

/// In-memory volumes and masks. Ids come from one counter shared by both
/// kinds, so an id never names two objects.
#[derive(Default)]
pub struct SessionStore {
    next_id: Mutex<u64>,
    volumes: RwLock<HashMap<u64, Arc<Volume>>>,
    masks: RwLock<HashMap<u64, Arc<Mask>>>,
}

impl SessionStore {
    fn allocate(&self) -> u64 {
        let mut next = self.next_id.lock().unwrap();
        *next += 1;
        *next
    }

    pub fn insert_volume(&self, volume: Volume) -> u64 {
        let id = self.allocate();
        self.volumes.write().unwrap().insert(id, Arc::new(volume));
        id
    }

    pub fn insert_mask(&self, mask: Mask) -> u64 {
        let id = self.allocate();
        self.masks.write().unwrap().insert(id, Arc::new(mask));
        id
    }

    pub fn volume(&self, id: u64) -> Option<Arc<Volume>> {
        self.volumes.read().unwrap().get(&id).cloned()
    }

    pub fn mask(&self, id: u64) -> Option<Arc<Mask>> {
        self.masks.read().unwrap().get(&id).cloned()
    }

    pub fn volume_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.volumes.read().unwrap().keys().copied().collect();
        ids.sort_unstable();
        ids
    }
}
