use super::{CoupledEngine, Rates, RunSummary};
use crate::lattice::Configuration;
use crate::rng::{tag, ReplicaStream};

const LOWER: u8 = 1;
const UPPER: u8 = 2;
const NO_CLASS: u8 = u8::MAX;
const CLASSES: usize = 6;
const MARGIN: i64 = 3;

/// Class of an upper-infected site with `a` live outgoing edges, `b` of
/// which also carry the extra rate. Always `b <= a <= 2`.
#[inline]
fn class_index(a: u8, b: u8) -> u8 {
    a * (a + 1) / 2 + b
}

/// Effect of the directed edge `i -> j` given the two site states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    Idle,
    /// Infects `j` in the lower process only (`j` is already upper-infected).
    LowerOnly,
    /// Infects `j` in the upper process, and in the lower one too when the
    /// shared clock rings and `i` is lower-infected.
    Upper,
}

#[inline]
fn edge(si: u8, sj: u8) -> Edge {
    if si & UPPER != 0 && sj & UPPER == 0 {
        Edge::Upper
    } else if si & LOWER != 0 && sj & LOWER == 0 {
        Edge::LowerOnly
    } else {
        Edge::Idle
    }
}

/// Rejection-free simulation of the coupled pair.
///
/// The pair `(L, U)` jumps
///
/// * `i -> healthy` in both, at rate 1 for every `i ∈ U`;
/// * `j -> infected` along a directed edge `i -> j` at rate `lambda1` in
///   every marginal where `i` is infected and `j` is not;
/// * `j -> infected` in `U` only, at rate `lambda2 - lambda1`, along every
///   edge with `i ∈ U`, `j ∉ U`.
///
/// These are exactly the transitions induced by the five clocks of the
/// graphical construction with the no-op rings removed, so the law of the
/// pair is unchanged. Upper sites are grouped by their total outgoing rate,
/// which takes one of six values, so each step costs O(1).
pub struct JumpEngine {
    state: Vec<u8>,
    class: Vec<u8>,
    pos: Vec<u32>,
    origin: i64,
    members: [Vec<i64>; CLASSES],
    span: (i64, i64),
}

impl JumpEngine {
    pub fn new() -> Self {
        let len = 256;
        JumpEngine {
            state: vec![0; len],
            class: vec![NO_CLASS; len],
            pos: vec![0; len],
            origin: -(len as i64 / 2),
            members: Default::default(),
            span: (0, -1),
        }
    }

    fn reset(&mut self) {
        if self.span.0 <= self.span.1 {
            let lo = (self.span.0 - 1 - self.origin) as usize;
            let hi = (self.span.1 + 1 - self.origin) as usize;
            self.state[lo..=hi].fill(0);
            self.class[lo..=hi].fill(NO_CLASS);
        }
        for m in &mut self.members {
            m.clear();
        }
        self.span = (i64::MAX, i64::MIN);
    }

    #[inline]
    fn idx(&self, site: i64) -> usize {
        (site - self.origin) as usize
    }

    fn lookup(&self, site: i64) -> u8 {
        let k = site.checked_sub(self.origin).expect("lattice coordinate overflow");
        if k >= 0 && (k as usize) < self.state.len() {
            self.state[k as usize]
        } else {
            0
        }
    }

    /// Makes sure `site` and its neighbours up to distance two are stored.
    #[inline]
    fn reserve(&mut self, site: i64) {
        let k = site.checked_sub(self.origin).expect("lattice coordinate overflow");
        if k < MARGIN || k >= self.state.len() as i64 - MARGIN {
            self.grow(site);
        }
        if site < self.span.0 {
            self.span.0 = site;
        }
        if site > self.span.1 {
            self.span.1 = site;
        }
    }

    #[cold]
    fn grow(&mut self, site: i64) {
        let len = self.state.len() as i64;
        let lo = self.origin.min(site - MARGIN);
        let hi = (self.origin + len - 1).max(site + MARGIN);
        let new_len = ((hi - lo + 1) * 2).max(len * 2);
        let new_origin = lo
            .checked_sub((new_len - (hi - lo + 1)) / 2)
            .expect("lattice coordinate overflow");
        let shift = (self.origin - new_origin) as usize;
        let mut state = vec![0; new_len as usize];
        let mut class = vec![NO_CLASS; new_len as usize];
        let mut pos = vec![0; new_len as usize];
        state[shift..shift + len as usize].copy_from_slice(&self.state);
        class[shift..shift + len as usize].copy_from_slice(&self.class);
        pos[shift..shift + len as usize].copy_from_slice(&self.pos);
        self.state = state;
        self.class = class;
        self.pos = pos;
        self.origin = new_origin;
    }

    /// Recomputes the rate class of `site` from its neighbourhood.
    #[inline]
    fn reclass(&mut self, site: i64) {
        let k = self.idx(site);
        let s = self.state[k];
        let new = if s & UPPER == 0 {
            NO_CLASS
        } else {
            let (mut a, mut b) = (0, 0);
            for nb in [self.state[k - 1], self.state[k + 1]] {
                match edge(s, nb) {
                    Edge::Idle => {}
                    Edge::LowerOnly => a += 1,
                    Edge::Upper => {
                        a += 1;
                        b += 1;
                    }
                }
            }
            class_index(a, b)
        };
        let old = self.class[k];
        if new == old {
            return;
        }
        if old != NO_CLASS {
            let list = &mut self.members[old as usize];
            let p = self.pos[k] as usize;
            list.swap_remove(p);
            if p < list.len() {
                let moved = list[p];
                let m = (moved - self.origin) as usize;
                self.pos[m] = p as u32;
            }
        }
        if new != NO_CLASS {
            let list = &mut self.members[new as usize];
            self.pos[k] = list.len() as u32;
            list.push(site);
        }
        self.class[k] = new;
    }

    fn reclass_around(&mut self, site: i64) {
        self.reclass(site - 1);
        self.reclass(site);
        self.reclass(site + 1);
    }

    #[cfg(test)]
    fn upper_count(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }
}

impl Default for JumpEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl CoupledEngine for JumpEngine {
    fn run_sorted(
        &mut self,
        lower: &[i64],
        upper: &[i64],
        rates: Rates,
        t: f64,
        stream: &ReplicaStream,
    ) -> RunSummary {
        self.reset();
        for &s in upper {
            self.reserve(s);
            let k = self.idx(s);
            self.state[k] = UPPER;
        }
        for &s in lower {
            let k = self.idx(s);
            self.state[k] |= LOWER;
        }
        for &s in upper {
            self.reclass_around(s);
        }

        let l1 = rates.lambda1();
        let l2 = rates.lambda2();
        let mut class_rate = [0.0; CLASSES];
        for a in 0..=2u8 {
            for b in 0..=a {
                class_rate[class_index(a, b) as usize] =
                    1.0 + l1 * f64::from(a) + (l2 - l1) * f64::from(b);
            }
        }

        let mut rng = stream.sub(tag::JUMP).rng();
        let mut now = 0.0;
        let mut events = 0u64;
        loop {
            let mut weights = [0.0; CLASSES];
            let mut total = 0.0;
            for c in 0..CLASSES {
                weights[c] = class_rate[c] * self.members[c].len() as f64;
                total += weights[c];
            }
            if total == 0.0 {
                return RunSummary {
                    time: now,
                    extinct_at: Some(now),
                    events,
                };
            }
            now += rng.exponential(total);
            if now > t {
                return RunSummary {
                    time: t,
                    extinct_at: None,
                    events,
                };
            }
            events += 1;

            let mut x = rng.uniform() * total;
            let mut c = CLASSES - 1;
            for (k, &w) in weights.iter().enumerate() {
                if x < w {
                    c = k;
                    break;
                }
                x -= w;
            }
            while self.members[c].is_empty() {
                c -= 1;
            }
            let list = &self.members[c];
            let r = class_rate[c];
            let n = ((x / r) as usize).min(list.len() - 1);
            let i = list[n];
            let mut y = (x - n as f64 * r).clamp(0.0, r);

            let ki = self.idx(i);
            let si = self.state[ki];
            if y < 1.0 {
                self.state[ki] = 0;
                self.reclass_around(i);
                continue;
            }
            y -= 1.0;
            let mut fired = None;
            for j in [i - 1, i + 1] {
                let kind = edge(si, self.state[self.idx(j)]);
                let w = match kind {
                    Edge::Idle => continue,
                    Edge::LowerOnly => l1,
                    Edge::Upper => l2,
                };
                fired = Some((j, kind, y.min(w)));
                if y < w {
                    break;
                }
                y -= w;
            }
            let (j, kind, y) = fired.expect("site class out of sync with its edges");
            self.reserve(j);
            let kj = self.idx(j);
            match kind {
                Edge::LowerOnly => self.state[kj] |= LOWER,
                Edge::Upper if y < l1 => self.state[kj] = UPPER | (si & LOWER),
                Edge::Upper => self.state[kj] = UPPER,
                Edge::Idle => unreachable!(),
            }
            assert!(self.state[kj] != LOWER, "coupling lost domination at site {j}");
            self.reclass_around(j);
        }
    }

    fn lower_at(&self, site: i64) -> bool {
        self.lookup(site) & LOWER != 0
    }

    fn upper_at(&self, site: i64) -> bool {
        self.lookup(site) & UPPER != 0
    }

    fn lower_config(&self) -> Configuration {
        (self.span.0..=self.span.1).filter(|&s| self.lower_at(s)).collect()
    }

    fn upper_config(&self) -> Configuration {
        (self.span.0..=self.span.1).filter(|&s| self.upper_at(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_indices_are_distinct() {
        let mut seen = Vec::new();
        for a in 0..=2u8 {
            for b in 0..=a {
                seen.push(class_index(a, b));
            }
        }
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn grows_far_from_origin_and_resets() {
        let mut e = JumpEngine::new();
        let s = ReplicaStream::new(3, 0);
        let rates = Rates::coupled(0.0, 0.0).unwrap();
        e.run_sorted(&[5000], &[-4000, 5000], rates, 1e-9, &s);
        assert!(e.lower_at(5000) && e.upper_at(-4000) && !e.lower_at(-4000));
        e.run_sorted(&[], &[1], rates, 1e-9, &s);
        assert!(!e.upper_at(5000) && !e.upper_at(-4000) && e.upper_at(1));
        assert_eq!(e.upper_count(), 1);
    }
}
