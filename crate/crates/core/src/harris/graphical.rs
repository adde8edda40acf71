use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{ClockKind, CoupledEngine, Rates, RunSummary};
use crate::lattice::Configuration;
use crate::rng::{tag, CounterRng, ReplicaStream, StreamKey};
use crate::strip::Strip;

/// Width of the time buckets a clock stream is cut into. Arrivals inside
/// bucket `b` come from the key `(site, kind, b)`, which makes the stream
/// random-access: seeking to time `s` only regenerates bucket `floor(s)`.
const BUCKET: f64 = 1.0;

/// Cursor over the Poisson arrivals of one `(site, kind)` clock.
#[derive(Debug, Clone)]
struct Clock {
    key: StreamKey,
    rate: f64,
    bucket: u64,
    rng: CounterRng,
    /// First arrival not yet consumed.
    next: f64,
    started: bool,
}

impl Clock {
    fn new(key: StreamKey, rate: f64) -> Self {
        Clock {
            key,
            rate,
            bucket: 0,
            rng: key.rng(),
            next: if rate > 0.0 { f64::NAN } else { f64::INFINITY },
            started: false,
        }
    }

    fn enter(&mut self, bucket: u64) {
        self.bucket = bucket;
        self.rng = self.key.child(bucket).rng();
        self.draw_from(bucket as f64 * BUCKET);
    }

    fn draw_from(&mut self, mut from: f64) {
        loop {
            let cand = from + self.rng.exponential(self.rate);
            let end = (self.bucket + 1) as f64 * BUCKET;
            if cand < end {
                self.next = cand;
                return;
            }
            self.bucket += 1;
            self.rng = self.key.child(self.bucket).rng();
            from = self.bucket as f64 * BUCKET;
        }
    }

    /// Positions the cursor on the first arrival strictly after `s`.
    fn seek_after(&mut self, s: f64) {
        if self.rate <= 0.0 {
            return;
        }
        let target = (s / BUCKET).floor() as u64;
        if !self.started || target > self.bucket {
            self.started = true;
            self.enter(target);
        }
        while self.next <= s {
            self.draw_from(self.next);
        }
    }

    fn consume(&mut self) {
        let at = self.next;
        self.draw_from(at);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    time: f64,
    site: i64,
    kind: ClockKind,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.site.cmp(&other.site))
            .then(self.kind.cmp(&other.kind))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Slot {
    lower: bool,
    upper: bool,
    /// 1 + index into the clock pool, 0 when not materialized yet.
    clocks: u32,
}

/// Harris graphical construction with lazily materialized clocks.
///
/// Only sites infected in the upper marginal are scheduled; a clock at a
/// healthy site cannot change either marginal. A site's clocks are created
/// on first infection and kept for the rest of the replica, so a site that
/// recovers and is reinfected continues on the same Poisson streams.
pub struct GraphicalEngine {
    slots: Strip<Slot>,
    pool: Vec<[Clock; 5]>,
    heap: BinaryHeap<Reverse<Pending>>,
    key: StreamKey,
    rates: Rates,
    upper_count: usize,
    touched: (i64, i64),
}

impl GraphicalEngine {
    pub fn new() -> Self {
        GraphicalEngine {
            slots: Strip::new(),
            pool: Vec::new(),
            heap: BinaryHeap::new(),
            key: StreamKey::root(0),
            rates: Rates::single(0.0).unwrap(),
            upper_count: 0,
            touched: (0, -1),
        }
    }

    fn reset(&mut self) {
        if self.touched.0 <= self.touched.1 {
            self.slots.clear_range(self.touched.0, self.touched.1);
        }
        self.pool.clear();
        self.heap.clear();
        self.upper_count = 0;
        self.touched = (i64::MAX, i64::MIN);
    }

    fn touch(&mut self, site: i64) -> &mut Slot {
        self.touched.0 = self.touched.0.min(site);
        self.touched.1 = self.touched.1.max(site);
        self.slots.slot(site)
    }

    fn clocks_of(&mut self, site: i64) -> usize {
        let idx = self.touch(site).clocks;
        if idx != 0 {
            return idx as usize - 1;
        }
        let base = self.key.site(site);
        let rates = self.rates;
        let clocks = ClockKind::ALL.map(|k| Clock::new(base.child(k as u64), k.rate(rates)));
        self.pool.push(clocks);
        let idx = self.pool.len();
        self.slots.slot(site).clocks = idx as u32;
        idx - 1
    }

    fn schedule(&mut self, site: i64, idx: usize) {
        let clocks = &self.pool[idx];
        let mut best = 0;
        for k in 1..5 {
            if clocks[k].next < clocks[best].next {
                best = k;
            }
        }
        let time = clocks[best].next;
        if time.is_finite() {
            self.heap.push(Reverse(Pending {
                time,
                site,
                kind: ClockKind::ALL[best],
            }));
        }
    }

    /// `site` just became infected in the upper marginal at time `now`.
    fn activate(&mut self, site: i64, now: f64) {
        let idx = self.clocks_of(site);
        for c in self.pool[idx].iter_mut() {
            c.seek_after(now);
        }
        self.schedule(site, idx);
    }

    fn state(&self, site: i64) -> Slot {
        self.slots.get(site).copied().unwrap_or_default()
    }
}

impl Default for GraphicalEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl CoupledEngine for GraphicalEngine {
    fn run_sorted(
        &mut self,
        lower: &[i64],
        upper: &[i64],
        rates: Rates,
        t: f64,
        stream: &ReplicaStream,
    ) -> RunSummary {
        self.reset();
        self.key = stream.sub(tag::CLOCKS);
        self.rates = rates;
        for &s in lower {
            self.touch(s).lower = true;
        }
        for &s in upper {
            self.touch(s).upper = true;
        }
        self.upper_count = upper.len();
        if t > 0.0 {
            for &s in upper {
                self.activate(s, 0.0);
            }
        }

        let mut now;
        let mut events = 0u64;
        let mut extinct_at = None;
        if self.upper_count == 0 {
            extinct_at = Some(0.0);
        }
        while self.upper_count > 0 {
            let Some(Reverse(ev)) = self.heap.pop() else {
                break;
            };
            if ev.time > t {
                break;
            }
            now = ev.time;
            events += 1;
            let i = ev.site;
            match ev.kind.offset() {
                None => {
                    let slot = self.touch(i);
                    slot.lower = false;
                    slot.upper = false;
                    self.upper_count -= 1;
                }
                Some(d) => {
                    let j = i.checked_add(d).expect("lattice coordinate overflow");
                    let src = self.state(i);
                    let dst = self.state(j);
                    if ev.kind.drives_lower() && src.lower && !dst.lower {
                        self.touch(j).lower = true;
                    }
                    if src.upper && !dst.upper {
                        self.touch(j).upper = true;
                        self.upper_count += 1;
                        self.activate(j, now);
                    }
                    let after = self.state(j);
                    assert!(!after.lower || after.upper, "coupling lost domination at site {j}");
                }
            }
            let idx = self.clocks_of(i);
            self.pool[idx][ev.kind as usize].consume();
            let after = self.state(i);
            assert!(!after.lower || after.upper, "coupling lost domination at site {i}");
            if after.upper {
                self.schedule(i, idx);
            }
            if self.upper_count == 0 {
                extinct_at = Some(now);
            }
        }
        RunSummary {
            time: extinct_at.unwrap_or(t),
            extinct_at,
            events,
        }
    }

    fn lower_at(&self, site: i64) -> bool {
        self.state(site).lower
    }

    fn upper_at(&self, site: i64) -> bool {
        self.state(site).upper
    }

    fn lower_config(&self) -> Configuration {
        (self.touched.0..=self.touched.1)
            .filter(|&s| self.state(s).lower)
            .collect()
    }

    fn upper_config(&self) -> Configuration {
        (self.touched.0..=self.touched.1)
            .filter(|&s| self.state(s).upper)
            .collect()
    }
}
