use contact_core::oracle::{check_duality, RingChain};
use contact_core::rng::StreamKey;
use contact_core::Configuration;

fn random_set(n: usize, rng: &mut contact_core::rng::CounterRng) -> Configuration {
    let lo = -((n / 2) as i64);
    loop {
        let c: Configuration = (0..n as i64)
            .filter(|_| rng.uniform() < 0.3)
            .map(|k| lo + k)
            .collect();
        if !c.is_empty() {
            return c;
        }
    }
}

#[test]
fn duality_holds_on_random_instances() {
    let mut rng = StreamKey::root(77).rng();
    for case in 0..30 {
        let n = 4 + (rng.uniform() * 9.0) as usize;
        let lambda = 0.3 + 3.7 * rng.uniform();
        let t = 0.5 + 2.5 * rng.uniform();
        let xi = random_set(n, &mut rng);
        let a = random_set(n, &mut rng);
        let chain = RingChain::new(n, lambda).unwrap();
        let r = check_duality(&chain, &xi, &a, t).unwrap();
        assert!(r < 1e-8, "case {case}: n={n} lambda={lambda} t={t} xi={xi} a={a}: {r:e}");
    }
}

#[test]
fn duality_reference_instance() {
    let chain = RingChain::new(10, 1.3).unwrap();
    let xi = Configuration::from_sites([-2, 3]);
    let a = Configuration::singleton(0);
    assert!(check_duality(&chain, &xi, &a, 2.0).unwrap() < 1e-8);
}

#[test]
fn duality_degenerate_cases() {
    let chain = RingChain::new(6, 2.0).unwrap();
    let xi = Configuration::from_sites([-1, 2]);
    assert_eq!(check_duality(&chain, &xi, &xi, 1.0).unwrap(), 0.0);
    assert!(check_duality(&chain, &xi, &Configuration::new(), 1.0).is_err());
}
