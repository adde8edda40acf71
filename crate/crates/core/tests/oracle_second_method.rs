//! Exact transient laws checked against methods that share no code with the
//! uniformization solver: a dense matrix exponential (scaling and squaring)
//! and a scaled Taylor series for the action of the exponential. Both build
//! their own generator from the transition rules.

use contact_core::oracle::{
    exact_sensitivity, occupation_probability, transient_distribution, Boundary, RingChain,
};
use contact_core::{f_sensitivity, Configuration, WindowLambdaR};
use nalgebra::{DMatrix, DVector};

fn min_label(n: usize) -> i64 {
    -((n / 2) as i64)
}

fn mask_of(n: usize, sites: &[i64]) -> usize {
    sites
        .iter()
        .map(|s| 1usize << (s - min_label(n)).rem_euclid(n as i64))
        .fold(0, |a, b| a | b)
}

/// Off-diagonal transitions of the ring contact process: each infected site
/// recovers at rate 1; each healthy site is infected at rate `lambda` per
/// infected ring neighbour.
fn transitions(n: usize, lambda: f64) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for s in 0..1usize << n {
        for k in 0..n {
            if s >> k & 1 == 1 {
                out.push((s, s & !(1 << k), 1.0));
            } else {
                let left = (k + n - 1) % n;
                let right = (k + 1) % n;
                let sick = (s >> left & 1) + (s >> right & 1);
                if sick > 0 && lambda > 0.0 {
                    out.push((s, s | 1 << k, lambda * sick as f64));
                }
            }
        }
    }
    out
}

fn dense_law(n: usize, lambda: f64, init: &[i64], t: f64) -> DVector<f64> {
    let states = 1usize << n;
    let mut q = DMatrix::<f64>::zeros(states, states);
    for (from, to, rate) in transitions(n, lambda) {
        q[(from, to)] += rate;
        q[(from, from)] -= rate;
    }
    let p = (q * t).exp();
    p.row(mask_of(n, init)).transpose()
}

/// `v exp(tQ)` via `s` steps of a Taylor series truncated at machine
/// precision, with `s` chosen so every step has norm below one.
fn taylor_law(n: usize, lambda: f64, init: &[i64], t: f64) -> Vec<f64> {
    let states = 1usize << n;
    let trans = transitions(n, lambda);
    let mut exit = vec![0.0; states];
    for &(from, _, rate) in &trans {
        exit[from] += rate;
    }
    let norm = 2.0 * exit.iter().copied().fold(0.0, f64::max) * t;
    let steps = norm.ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let apply = |v: &[f64]| {
        let mut out: Vec<f64> = v.iter().zip(&exit).map(|(x, e)| -x * e * h).collect();
        for &(from, to, rate) in &trans {
            out[to] += v[from] * rate * h;
        }
        out
    };
    let mut v = vec![0.0; states];
    v[mask_of(n, init)] = 1.0;
    for _ in 0..steps {
        let mut acc = v.clone();
        let mut term = v.clone();
        for k in 1..60 {
            term = apply(&term);
            for x in term.iter_mut() {
                *x /= k as f64;
            }
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += x;
            }
            if term.iter().map(|x| x.abs()).sum::<f64>() < 1e-18 {
                break;
            }
        }
        v = acc;
    }
    v
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn solver_law(n: usize, lambda: f64, init: &[i64], t: f64) -> Vec<f64> {
    let chain = RingChain::new(n, lambda).unwrap();
    transient_distribution(&chain, &Configuration::from_sites(init.iter().copied()), t)
        .unwrap()
        .probs
}

#[test]
fn uniformization_matches_dense_exponential_small_rings() {
    let cases: &[(usize, f64, &[i64], f64)] = &[
        (4, 0.5, &[0], 1.0),
        (5, 2.0, &[-2, 1], 0.7),
        (6, 1.0, &[0], 2.5),
        (6, 3.3, &[-3, 0, 2], 1.2),
        (7, 1.6, &[1], 3.0),
        (8, 1.0, &[0], 1.5),
        (8, 4.0, &[-4, 3], 0.5),
        (8, 0.3, &[-1, 0, 1], 3.0),
    ];
    for &(n, lambda, init, t) in cases {
        let dense = dense_law(n, lambda, init, t);
        let ours = solver_law(n, lambda, init, t);
        let d = max_diff(dense.as_slice(), &ours);
        assert!(d < 1e-9, "n={n} lambda={lambda} t={t}: {d:e}");
    }
}

#[test]
fn taylor_route_matches_dense_route() {
    let dense = dense_law(7, 2.2, &[0, 2], 1.7);
    let taylor = taylor_law(7, 2.2, &[0, 2], 1.7);
    assert!(max_diff(dense.as_slice(), &taylor) < 1e-11);
}

#[test]
fn ten_site_occupation_agrees_with_dense_exponential() {
    let dense = dense_law(10, 1.0, &[0], 1.5);
    let bit = mask_of(10, &[0]);
    let second: f64 = (0..1usize << 10).filter(|s| s & bit != 0).map(|s| dense[s]).sum();
    let chain = RingChain::new(10, 1.0).unwrap();
    let ours = occupation_probability(&chain, &Configuration::singleton(0), 0, 1.5).unwrap();
    assert!((ours - second).abs() < 1e-9, "{ours} vs {second}");
}

#[test]
fn twelve_site_sensitivity_agrees_with_taylor_route() {
    let (n, lambda, p, q, r, t) = (12, 1.0, 0.7, 0.9, 2, 3.0);
    let law = taylor_law(n, lambda, &[0], t);
    let a = mask_of(n, &[-r]);
    let b = mask_of(n, &[r]);
    let second: f64 = law
        .iter()
        .enumerate()
        .map(|(s, pr)| {
            let x = (s & a != 0) as u32 + (s & b != 0) as u32;
            pr * f_sensitivity(x, p, q).unwrap()
        })
        .sum();
    let chain = RingChain::new(n, lambda).unwrap();
    let ours = exact_sensitivity(&chain, p, q, WindowLambdaR::new(r).unwrap(), t).unwrap();
    assert!((ours - second).abs() < 1e-9, "{ours} vs {second}");
}

#[test]
fn pure_death_law_is_exponential() {
    let law = solver_law(6, 0.0, &[0], 2.0);
    let single = mask_of(6, &[0]);
    assert!((law[single] - (-2.0f64).exp()).abs() < 1e-12);
    assert!((law[0] - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    let rest: f64 = law
        .iter()
        .enumerate()
        .filter(|(s, _)| *s != 0 && *s != single)
        .map(|(_, p)| p)
        .sum();
    assert!(rest.abs() < 1e-15);
}

#[test]
fn exact_occupation_is_monotone_in_lambda() {
    let origin = Configuration::singleton(0);
    let mut prev = 0.0;
    for k in 0..=12 {
        let lambda = 0.25 * k as f64;
        let chain = RingChain::new(9, lambda).unwrap();
        let v = occupation_probability(&chain, &origin, 2, 2.0).unwrap();
        assert!(v >= prev - 1e-13, "lambda={lambda}: {v} < {prev}");
        prev = v;
    }
}

#[test]
fn boundary_effect_on_tested_functionals_is_negligible() {
    let origin = Configuration::singleton(0);
    let occ = |n, b| {
        let c = RingChain::with_boundary(n, 1.0, b).unwrap();
        occupation_probability(&c, &origin, 0, 1.5).unwrap()
    };
    let base = occ(10, Boundary::Ring);
    assert!((base - occ(14, Boundary::Ring)).abs() < 1e-6);
    assert!((base - occ(10, Boundary::Segment)).abs() < 1e-6);

    let sens = |n, b| {
        let c = RingChain::with_boundary(n, 1.0, b).unwrap();
        exact_sensitivity(&c, 0.7, 0.9, WindowLambdaR::new(2).unwrap(), 3.0).unwrap()
    };
    let base = sens(12, Boundary::Ring);
    assert!((base - sens(14, Boundary::Ring)).abs() < 1e-5);
    assert!((base - sens(12, Boundary::Segment)).abs() < 1e-5);
}

#[test]
fn boundary_effect_on_split_fixture_is_negligible() {
    let split = |n| {
        let c = RingChain::new(n, 1.0).unwrap();
        let hi = occupation_probability(&c, &Configuration::from_sites([-2, 2]), 0, 3.0).unwrap();
        let lo = occupation_probability(&c, &Configuration::singleton(-2), 0, 3.0).unwrap();
        hi - lo
    };
    assert!((split(12) - split(14)).abs() < 1e-5);
}
