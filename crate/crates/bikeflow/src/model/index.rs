/// Identity of a coordinate in the per-class state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    /// Station `j` (0-based).
    Station(usize),
    /// Road from `origin` to `dest` carrying class `class` (1 or 2).
    Road { origin: usize, dest: usize, class: u8 },
}

/// Bijection between network nodes and state-vector coordinates.
///
/// Stations occupy coordinates `0..N`; road-class pairs follow in
/// lexicographic `(origin, dest, class)` order, two coordinates per road.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMap {
    n: usize,
}

impl IndexMap {
    pub fn new(n_stations: usize) -> Self {
        assert!(n_stations >= 2, "need at least two stations");
        Self { n: n_stations }
    }

    pub fn n_stations(&self) -> usize {
        self.n
    }

    pub fn n_roads(&self) -> usize {
        self.n * (self.n - 1)
    }

    /// Total state dimension `N + 2N(N-1)`.
    pub fn dim(&self) -> usize {
        self.n + 2 * self.n_roads()
    }

    pub fn station(&self, j: usize) -> usize {
        debug_assert!(j < self.n);
        j
    }

    /// Index of the directed road `origin → dest` among all `N(N-1)` roads.
    pub fn road_pair(&self, origin: usize, dest: usize) -> usize {
        debug_assert!(origin != dest && origin < self.n && dest < self.n);
        origin * (self.n - 1) + if dest < origin { dest } else { dest - 1 }
    }

    /// Coordinate of road `origin → dest`, class `1` or `2`.
    pub fn road(&self, origin: usize, dest: usize, class: u8) -> usize {
        debug_assert!(class == 1 || class == 2);
        self.n + 2 * self.road_pair(origin, dest) + (class as usize - 1)
    }

    /// Inverse of the coordinate mapping.
    pub fn coordinate(&self, index: usize) -> Coordinate {
        if index < self.n {
            return Coordinate::Station(index);
        }
        let rest = index - self.n;
        let pair = rest / 2;
        let class = (rest % 2) as u8 + 1;
        let origin = pair / (self.n - 1);
        let off = pair % (self.n - 1);
        let dest = if off < origin { off } else { off + 1 };
        Coordinate::Road { origin, dest, class }
    }

    /// Iterator over `(origin, dest)` pairs in road order.
    pub fn road_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |j| (0..n).filter(move |&i| i != j).map(move |i| (j, i)))
    }

    /// Human-readable label, 1-based to match the usual notation.
    pub fn label(&self, index: usize) -> String {
        match self.coordinate(index) {
            Coordinate::Station(j) => format!("S{}", j + 1),
            Coordinate::Road { origin, dest, class } => {
                format!("R{}->{}({})", origin + 1, dest + 1, class)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(IndexMap::new(2).dim(), 6);
        assert_eq!(IndexMap::new(3).dim(), 15);
        assert_eq!(IndexMap::new(4).dim(), 28);
    }

    #[test]
    fn lexicographic_road_order() {
        // With 1-based numbering: stations at 1..2, then (1->2, class 1) at 3,
        // (1->2, class 2) at 4, (2->1, class 1) at 5, (2->1, class 2) at 6.
        let idx = IndexMap::new(2);
        assert_eq!(idx.station(0), 0);
        assert_eq!(idx.station(1), 1);
        assert_eq!(idx.road(0, 1, 1), 2);
        assert_eq!(idx.road(0, 1, 2), 3);
        assert_eq!(idx.road(1, 0, 1), 4);
        assert_eq!(idx.road(1, 0, 2), 5);
    }

    #[test]
    fn roundtrip_bijection() {
        for n in 2..=5 {
            let idx = IndexMap::new(n);
            for c in 0..idx.dim() {
                let back = match idx.coordinate(c) {
                    Coordinate::Station(j) => idx.station(j),
                    Coordinate::Road { origin, dest, class } => idx.road(origin, dest, class),
                };
                assert_eq!(back, c);
            }
        }
    }

    #[test]
    fn labels() {
        let idx = IndexMap::new(2);
        assert_eq!(idx.label(0), "S1");
        assert_eq!(idx.label(2), "R1->2(1)");
        assert_eq!(idx.label(5), "R2->1(2)");
    }
}
