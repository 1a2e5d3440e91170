//! Binary indexed tree over non-negative weights with prefix search.

#[derive(Clone, Debug)]
pub(crate) struct Fenwick {
    tree: Vec<f64>,
    total: f64,
}

impl Fenwick {
    pub(crate) fn new(capacity: usize) -> Fenwick {
        Fenwick { tree: vec![0.0; capacity + 1], total: 0.0 }
    }

    pub(crate) fn clear(&mut self) {
        self.tree.iter_mut().for_each(|x| *x = 0.0);
        self.total = 0.0;
    }

    pub(crate) fn add(&mut self, i: usize, delta: f64) {
        self.total += delta;
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    pub(crate) fn total(&self) -> f64 {
        self.total
    }

    /// Smallest index whose inclusive prefix sum exceeds `u`.
    pub(crate) fn find(&self, mut u: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                u -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}
