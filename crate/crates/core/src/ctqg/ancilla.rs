use super::circuit::Line;

/// Pool of zeroed ancilla lines. Released lines must be back in state 0;
/// they are handed out again before any new line is created.
#[derive(Clone, Debug, Default)]
pub struct AncillaManager {
    pool: Vec<Line>,
    /// Every line this manager ever created, in creation order.
    created: Vec<Line>,
    live: usize,
    high_water: usize,
}

impl AncillaManager {
    pub fn new() -> Self {
        Self::default()
    }

    /// A zeroed line: from the pool if possible, else `*next_line` (which is
    /// then advanced).
    pub fn alloc(&mut self, next_line: &mut Line) -> Line {
        let line = match self.pool.pop() {
            Some(l) => l,
            None => {
                let l = *next_line;
                *next_line += 1;
                self.created.push(l);
                l
            }
        };
        self.live += 1;
        self.high_water = self.high_water.max(self.live);
        line
    }

    pub fn alloc_n(&mut self, n: usize, next_line: &mut Line) -> Vec<Line> {
        (0..n).map(|_| self.alloc(next_line)).collect()
    }

    pub fn release(&mut self, line: Line) {
        debug_assert!(!self.pool.contains(&line));
        self.live -= 1;
        self.pool.push(line);
    }

    /// Release in reverse so the next `alloc_n` returns the same lines in
    /// the same order.
    pub fn release_all(&mut self, lines: &[Line]) {
        for l in lines.iter().rev() {
            self.release(*l);
        }
    }

    pub fn created(&self) -> &[Line] {
        &self.created
    }

    pub fn high_water(&self) -> usize {
        self.high_water
    }

    pub fn live(&self) -> usize {
        self.live
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reuses_before_creating() {
        let mut next = 10;
        let mut m = AncillaManager::new();
        let a = m.alloc_n(3, &mut next);
        assert_eq!(a, vec![10, 11, 12]);
        m.release_all(&a);
        let b = m.alloc_n(4, &mut next);
        assert_eq!(b, vec![10, 11, 12, 13]);
        assert_eq!(m.high_water(), 4);
        assert_eq!(m.created().len(), 4);
    }
}
