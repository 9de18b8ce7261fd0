use std::collections::BTreeMap;

use crate::traffic::CategoryTag;

/// Seconds of silence after which a vehicle stops counting as active.
pub const ACTIVE_TTL: u8 = 10;

/// Vehicles heard by the RSU recently, with their category and remaining
/// time-to-live in whole seconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActiveUserRegistry {
    entries: BTreeMap<u32, (CategoryTag, u8)>,
    per_category: [usize; 4],
    ticking: bool,
}

impl ActiveUserRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a packet from `vehicle_id`: inserts it or refreshes its TTL.
    /// Returns true when the periodic expiry tick should be started.
    pub fn register_packet(&mut self, vehicle_id: u32, category: CategoryTag) -> bool {
        match self.entries.insert(vehicle_id, (category, ACTIVE_TTL)) {
            Some((old, _)) if old != category => {
                self.per_category[old.index()] -= 1;
                self.per_category[category.index()] += 1;
            }
            Some(_) => {}
            None => self.per_category[category.index()] += 1,
        }
        let start = !self.ticking;
        self.ticking = true;
        start
    }

    /// One-second expiry pass: decrements every TTL and drops entries at zero.
    pub fn tick_active_users(&mut self) {
        let per_category = &mut self.per_category;
        self.entries.retain(|_, (cat, ttl)| {
            *ttl = ttl.saturating_sub(1);
            if *ttl == 0 {
                per_category[cat.index()] -= 1;
                false
            } else {
                true
            }
        });
    }

    pub fn is_ticking(&self) -> bool {
        self.ticking
    }

    pub fn contains(&self, vehicle_id: u32) -> bool {
        self.entries.contains_key(&vehicle_id)
    }

    pub fn category_of(&self, vehicle_id: u32) -> Option<CategoryTag> {
        self.entries.get(&vehicle_id).map(|e| e.0)
    }

    pub fn ttl(&self, vehicle_id: u32) -> Option<u8> {
        self.entries.get(&vehicle_id).map(|e| e.1)
    }

    /// Tv
    pub fn total_active(&self) -> usize {
        self.entries.len()
    }

    /// Tcv(c)
    pub fn active_in(&self, category: CategoryTag) -> usize {
        self.per_category[category.index()]
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }
}
