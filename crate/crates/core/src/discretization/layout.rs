/// Flat indexing of nodal values: element-major, then `j` (z) rows, then `i` (x)
/// fastest within an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    n1: usize,
    n_elements: usize,
}

impl DofLayout {
    pub fn new(n1: usize, n_elements: usize) -> Self {
        DofLayout { n1, n_elements }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn nodes_per_element(&self) -> usize {
        self.n1 * self.n1
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Dofs per scalar field.
    pub fn len(&self) -> usize {
        self.n_elements * self.nodes_per_element()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, element: usize, i: usize, j: usize) -> usize {
        (element * self.n1 + j) * self.n1 + i
    }

    #[inline]
    pub fn triple(&self, index: usize) -> (usize, usize, usize) {
        let npe = self.nodes_per_element();
        let local = index % npe;
        (index / npe, local % self.n1, local / self.n1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn index_round_trip(n1 in 2usize..10, ne in 1usize..50, seed in 0usize..100_000) {
            let layout = DofLayout::new(n1, ne);
            let idx = seed % layout.len();
            let (e, i, j) = layout.triple(idx);
            prop_assert!(e < ne && i < n1 && j < n1);
            prop_assert_eq!(layout.index(e, i, j), idx);
        }
    }

    #[test]
    fn bijection() {
        let layout = DofLayout::new(3, 4);
        let mut seen = vec![false; layout.len()];
        for e in 0..4 {
            for j in 0..3 {
                for i in 0..3 {
                    let k = layout.index(e, i, j);
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(layout.triple(k), (e, i, j));
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}
