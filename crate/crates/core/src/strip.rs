//! Dense storage over a contiguous range of Z that grows in both directions.

#[derive(Debug, Clone)]
pub(crate) struct Strip<T> {
    data: Vec<T>,
    origin: i64,
}

impl<T: Clone + Default> Strip<T> {
    pub fn new() -> Self {
        Strip {
            data: vec![T::default(); 64],
            origin: -32,
        }
    }

    #[inline]
    fn index(&self, site: i64) -> Option<usize> {
        let k = site.checked_sub(self.origin).expect("lattice coordinate overflow");
        if k >= 0 && (k as usize) < self.data.len() {
            Some(k as usize)
        } else {
            None
        }
    }

    #[inline]
    pub fn get(&self, site: i64) -> Option<&T> {
        self.index(site).map(|k| &self.data[k])
    }

    /// Mutable access, growing the strip so that `site` is covered.
    #[inline]
    pub fn slot(&mut self, site: i64) -> &mut T {
        if self.index(site).is_none() {
            self.grow_to(site);
        }
        let k = (site - self.origin) as usize;
        &mut self.data[k]
    }

    #[cold]
    fn grow_to(&mut self, site: i64) {
        let len = self.data.len() as i64;
        let lo = self.origin.min(site);
        let hi = (self.origin + len - 1).max(site);
        let span = hi - lo + 1;
        let new_len = (span * 2).max(len * 2);
        let pad = (new_len - span) / 2;
        let new_origin = lo.checked_sub(pad).expect("lattice coordinate overflow");
        let mut data = vec![T::default(); new_len as usize];
        let shift = (self.origin - new_origin) as usize;
        for (k, v) in self.data.drain(..).enumerate() {
            data[shift + k] = v;
        }
        self.data = data;
        self.origin = new_origin;
    }


    /// Resets the slots covering `lo..=hi`.
    pub fn clear_range(&mut self, lo: i64, hi: i64) {
        for site in lo..=hi {
            if let Some(k) = self.index(site) {
                self.data[k] = T::default();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grows_both_ways_and_keeps_values() {
        let mut s: Strip<i32> = Strip::new();
        *s.slot(0) = 1;
        *s.slot(1000) = 2;
        *s.slot(-5000) = 3;
        assert_eq!(s.get(0), Some(&1));
        assert_eq!(s.get(1000), Some(&2));
        assert_eq!(s.get(-5000), Some(&3));
        assert_eq!(s.get(7), Some(&0));
        s.clear_range(-5000, 0);
        assert_eq!(s.get(-5000), Some(&0));
        assert_eq!(s.get(1000), Some(&2));
    }
}
