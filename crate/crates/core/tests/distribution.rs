use lltrunc::{ParetoTail, TruncatedLogLogistic};
use proptest::prelude::*;
use quadrature::double_exponential::integrate;

/// Integrates `f` over [a, b] in unit-width pieces.
fn integrate_pieces(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64) -> f64 {
    let pieces = (b - a).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + k as f64 * h;
            integrate(f, lo, lo + h, 1e-14).integral
        })
        .sum()
}

/// ∫ pdf over (x_L, ∞) after the change of variables x = α·exp(z/β).
fn total_mass(d: &TruncatedLogLogistic) -> f64 {
    let (a, b) = (d.alpha(), d.beta());
    let z_lo = if d.is_truncated() { d.ln_eta() } else { -80.0 };
    let g = move |z: f64| {
        let x = a * (z / b).exp();
        if x <= d.x_l() {
            return 0.0;
        }
        d.pdf(x).unwrap() * x / b
    };
    integrate_pieces(g, z_lo, 80.0)
}

#[test]
fn pdf_integrates_to_one_over_parameter_grid() {
    let betas = [0.3, 0.7, 1.0, 2.5, 5.0, 10.0, 20.0, 35.0, 42.0, 50.0];
    let etas = [0.0, 10.0];
    let mut checked = 0;
    for (i, &beta) in betas.iter().enumerate() {
        for (j, &eta) in etas.iter().enumerate() {
            let eta = if j == 0 { eta } else { eta * (i as f64 + 1.0) / betas.len() as f64 };
            let alpha = 0.5 + 3.0 * i as f64;
            let x_l = alpha * eta.powf(1.0 / beta);
            let d = TruncatedLogLogistic::new(alpha, beta, x_l).unwrap();
            let mass = total_mass(&d);
            assert!((mass - 1.0).abs() < 1e-6, "alpha={alpha} beta={beta} eta={eta}: {mass}");
            checked += 1;
        }
    }
    assert_eq!(checked, 20);
}

#[test]
fn fitted_bladder_density_integrates_to_one() {
    let d = TruncatedLogLogistic::new(5.97, 1.695, 0.0).unwrap();
    assert!((total_mass(&d) - 1.0).abs() < 1e-6);
}

#[test]
fn pareto_density_integrates_to_one() {
    for (beta0, x_l) in [(1.0, 1.0), (0.2171, 1.0), (3.5, 12.0)] {
        let p = ParetoTail::new(beta0, x_l).unwrap();
        let g = |v: f64| {
            let x = x_l * v.exp();
            p.pdf(x).unwrap() * x
        };
        let mass = integrate_pieces(g, 1e-300, 80.0 / beta0);
        assert!((mass - 1.0).abs() < 1e-10, "beta0={beta0}: {mass}");
        assert_eq!(p.cdf(x_l).unwrap(), 0.0);
    }
}

#[test]
fn quantile_inverts_cdf_across_eight_decades() {
    for (alpha, beta, x_l) in [(1.0, 0.5, 1.0), (5.97, 1.695, 0.0), (2.0, 3.0, 0.1), (600.0, 12.0, 300.0)] {
        let d = TruncatedLogLogistic::new(alpha, beta, x_l).unwrap();
        let base = if x_l > 0.0 { x_l } else { alpha * 1e-3 };
        for k in 0..=32 {
            let x = base * (1.0 + 1e-3) * 10f64.powf(k as f64 / 4.0);
            let u = d.cdf(x).unwrap();
            if u >= 1.0 - 1e-6 {
                continue;
            }
            let back = d.quantile(u).unwrap();
            assert!(
                ((back - x) / x).abs() < 1e-9,
                "alpha={alpha} beta={beta} x_l={x_l} x={x}: {back}"
            );
        }
    }
}

#[test]
fn l1_distance_to_pareto_limit_shrinks() {
    let beta = 2.0;
    let pareto = ParetoTail::new(beta, 1.0).unwrap();
    let distance = |alpha: f64| {
        let d = TruncatedLogLogistic::new(alpha, beta, 1.0).unwrap();
        let g = |v: f64| {
            let x = v.exp();
            (d.pdf(x).unwrap() - pareto.pdf(x).unwrap()).abs() * x
        };
        integrate_pieces(g, 1e-300, 40.0)
    };
    let dists: Vec<f64> = [0.5, 0.2, 0.1, 0.05, 0.01].iter().map(|&a| distance(a)).collect();
    for w in dists.windows(2) {
        assert!(w[1] < w[0], "{dists:?}");
    }
    assert!(dists[4] < 0.05, "{dists:?}");
}

fn ks_distance(d: &TruncatedLogLogistic, mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = d.cdf(x).unwrap();
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn sampler_matches_its_distribution() {
    let n = 100_000;
    for (alpha, beta, x_l, seed) in [(1.0, 2.0, 1.0, 11), (5.97, 1.695, 0.0, 12), (3.0, 0.8, 30.0, 13)] {
        let d = TruncatedLogLogistic::new(alpha, beta, x_l).unwrap();
        let xs = d.sample(n, seed).unwrap();
        assert!(xs.iter().all(|&x| x > x_l));
        let stat = ks_distance(&d, xs) * (n as f64).sqrt();
        assert!(stat < 1.63, "alpha={alpha} beta={beta} x_l={x_l}: {stat}");
    }
}

proptest! {
    #[test]
    fn cdf_is_monotone_and_bounded(
        alpha in 0.01f64..100.0,
        beta in 0.2f64..40.0,
        eta in 0.0f64..10.0,
        a in 0.0f64..5.0,
        b in 0.0f64..5.0,
    ) {
        let x_l = alpha * eta.powf(1.0 / beta);
        let d = TruncatedLogLogistic::new(alpha, beta, x_l).unwrap();
        let lo = x_l + alpha * a.min(b);
        let hi = x_l + alpha * a.max(b) + 1e-9;
        let (fl, fh) = (d.cdf(lo).unwrap(), d.cdf(hi).unwrap());
        prop_assert!((0.0..=1.0).contains(&fl));
        prop_assert!((0.0..=1.0).contains(&fh));
        prop_assert!(fl <= fh);
        prop_assert!((d.cdf(hi).unwrap() + d.sf(hi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_of_quantile_is_identity(
        alpha in 0.01f64..100.0,
        beta in 0.2f64..40.0,
        eta in 0.0f64..10.0,
        u in 1e-9f64..0.999_999,
    ) {
        let x_l = alpha * eta.powf(1.0 / beta);
        let d = TruncatedLogLogistic::new(alpha, beta, x_l).unwrap();
        let x = d.quantile(u).unwrap();
        prop_assert!(x >= x_l);
        prop_assert!((d.cdf(x).unwrap() - u).abs() < 1e-9);
    }

    #[test]
    fn rescaling_preserves_probabilities(
        alpha in 0.1f64..10.0,
        beta in 0.3f64..20.0,
        eta in 0.0f64..5.0,
        k in 0.01f64..1000.0,
        t in 0.01f64..20.0,
    ) {
        let x_l = alpha * eta.powf(1.0 / beta);
        let d = TruncatedLogLogistic::new(alpha, beta, x_l).unwrap();
        let s = d.rescale(k).unwrap();
        let x = x_l + alpha * t;
        prop_assert!((d.cdf(x).unwrap() - s.cdf(k * x).unwrap()).abs() < 1e-12);
        let ratio = d.pdf(x).unwrap() / (k * s.pdf(k * x).unwrap());
        prop_assert!((ratio - 1.0).abs() < 1e-9);
    }
}
