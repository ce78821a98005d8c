use std::cmp::Ordering;

/// Pending simulation event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Insertion counter, final tie-break.
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Trip completion on road `origin → dest`, given class.
    Completion { origin: usize, dest: usize, class: u8 },
    /// Rider arrival at a station.
    Arrival { station: usize },
}

impl Event {
    /// Ordering key: time, then completions before arrivals, then lower
    /// coordinate, then insertion order. A return freeing a dock is processed
    /// before a simultaneous rental.
    fn key(&self) -> (f64, u8, usize, usize, u8, u64) {
        match self.kind {
            EventKind::Completion { origin, dest, class } => {
                (self.time, 0, origin, dest, class, self.seq)
            }
            EventKind::Arrival { station } => (self.time, 1, station, 0, 0, self.seq),
        }
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, ka, oa, da, ca, sa) = self.key();
        let (tb, kb, ob, db, cb, sb) = other.key();
        ta.total_cmp(&tb)
            .then(ka.cmp(&kb))
            .then(oa.cmp(&ob))
            .then(da.cmp(&db))
            .then(ca.cmp(&cb))
            .then(sa.cmp(&sb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_precedes_arrival_at_equal_time() {
        let c = Event { time: 1.0, kind: EventKind::Completion { origin: 1, dest: 0, class: 1 }, seq: 9 };
        let a = Event { time: 1.0, kind: EventKind::Arrival { station: 0 }, seq: 1 };
        assert!(c < a);
    }

    #[test]
    fn time_dominates() {
        let a = Event { time: 0.5, kind: EventKind::Arrival { station: 3 }, seq: 0 };
        let c = Event { time: 0.6, kind: EventKind::Completion { origin: 0, dest: 1, class: 1 }, seq: 0 };
        assert!(a < c);
    }

    #[test]
    fn lower_coordinate_first_within_kind() {
        let a = Event { time: 1.0, kind: EventKind::Arrival { station: 0 }, seq: 5 };
        let b = Event { time: 1.0, kind: EventKind::Arrival { station: 1 }, seq: 0 };
        assert!(a < b);
    }
}
