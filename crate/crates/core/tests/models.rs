mod common;

use mvsim::grid::{AffinePathView, TimeGrid};
use mvsim::models::{
    jansen_rit_diffusion, jansen_rit_drift, ks_b0, Excitability, JansenRit, JansenRitParams, KellerSegelParams,
    TimeFunction,
};
use mvsim::sim::{euler_step, initialize, BrownianDriver, InitialLaw, NoiseCursor, SimulationConfig};
use mvsim::transport::MeasurePathView;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(delay: f64) -> JansenRitParams {
    JansenRitParams {
        delay,
        epsilon: 0.05,
        input: [
            TimeFunction::Sine {
                offset: 1.0,
                amplitude: 0.5,
                frequency: 1.0,
            },
            TimeFunction::constant(0.2),
            TimeFunction::Linear {
                offset: 0.0,
                slope: 0.3,
            },
        ],
        noise: [
            TimeFunction::constant(0.4),
            TimeFunction::Linear {
                offset: 0.1,
                slope: 0.2,
            },
            TimeFunction::constant(0.3),
        ],
        excitability: Excitability::TanhCoordinate { index: 1 },
        ..JansenRitParams::default()
    }
}

fn trapezoid(values: impl Iterator<Item = f64>, h: f64) -> f64 {
    let g: Vec<f64> = values.collect();
    if g.len() < 2 {
        return 0.0;
    }
    let m = g.len() - 1;
    h / 2.0 * (g[0] + g[m]) + h * g[1..m].iter().sum::<f64>()
}

#[test]
fn jansen_rit_steps_match_full_recomputation() {
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let p = params(4.0 * grid.step_size());
    let model = JansenRit::new(p.clone()).unwrap();
    let (n, d) = (12, 3);
    let config = SimulationConfig::new(grid, n, 21);
    let initial = InitialLaw::Gaussian {
        mean: vec![0.5, -0.2, 1.0],
        sd: vec![0.3, 0.3, 0.3],
    };
    let mut ens = initialize(&model, &config, &initial).unwrap();
    let driver = BrownianDriver::new(21, 3);
    let mut noise = NoiseCursor::new(&driver, n, grid, 1);
    let h = grid.step_size();
    for m in 0..grid.steps() {
        let before: Vec<f64> = ens.states().to_vec();
        let integrals: Vec<f64> = (0..n).map(|i| ens.particle_integrals(i)[0]).collect();
        euler_step(&mut ens, &model, &mut noise).unwrap();
        let t = grid.knot(m);
        let measures = MeasurePathView::new(&before, n, d, m + 1, grid).unwrap();
        for (i, integral) in integrals.iter().enumerate() {
            let path = AffinePathView::new(&before, i * d, n * d, d, m + 1, grid).unwrap();
            let recomputed = trapezoid((0..=m).map(|k| p.excitability.eval(path.knot(k))), h);
            assert!((integral - recomputed).abs() <= 1e-12, "step {m} particle {i}");

            let b = jansen_rit_drift(&p, t, &path, &measures, recomputed).unwrap();
            let sigma = jansen_rit_diffusion(&p, t);
            let mut dw = [0.0; 3];
            driver.increment(i, m, 1, h, &mut dw);
            for j in 0..d {
                let expected = path.knot(m)[j] + h * b[j] + sigma[j * 3 + j] * dw[j];
                assert!((ens.state(i, m + 1)[j] - expected).abs() <= 1e-12, "step {m} particle {i}");
            }
        }
    }
}

fn random_measures(rng: &mut impl Rng, n: usize, len: usize) -> Vec<f64> {
    common::random_atoms(rng, n * len, 3, 6.0)
}

#[test]
fn drift_factors_are_bounded() {
    let grid = TimeGrid::new(2.0, 16).unwrap();
    let p = params(2.0 * grid.step_size());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let max_d = p.coupling.iter().flatten().fold(0.0f64, |a, b| a.max(*b));
    let h_bound = (1.0 + p.epsilon * p.excitability.sup() * grid.horizon()) * max_d;
    for _ in 0..200 {
        let len = rng.gen_range(1..=17);
        let path_data = common::random_atoms(&mut rng, len, 3, 20.0);
        let excitability = trapezoid(path_data.chunks(3).map(|x| p.excitability.eval(x)), grid.step_size());
        for k in 0..3 {
            for j in 0..3 {
                let hk = p.coupling[j][k] * (1.0 + p.epsilon * excitability);
                assert!(hk.abs() <= h_bound + 1e-12);
            }
        }
        let data = random_measures(&mut rng, 5, len);
        let measures = MeasurePathView::new(&data, 5, 3, len, grid).unwrap();
        let t = grid.knot(len - 1);
        for rate in p.delayed_rates(t, &measures).unwrap() {
            assert!(rate > 0.0 && rate < p.sigmoid.vm);
        }
    }
}

#[test]
fn drift_ignores_history_before_the_delay() {
    let grid = TimeGrid::new(1.0, 20).unwrap();
    let p = params(5.0 * grid.step_size());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let path_data = common::random_atoms(&mut rng, 21, 3, 2.0);
    let first = random_measures(&mut rng, 4, 21);
    let second = random_measures(&mut rng, 4, 21);
    for m in 0..=5 {
        let t = grid.knot(m);
        let path = AffinePathView::new(&path_data, 0, 3, 3, m + 1, grid).unwrap();
        let a = MeasurePathView::new(&first, 4, 3, m + 1, grid).unwrap();
        let b = MeasurePathView::new(&second, 4, 3, m + 1, grid).unwrap();
        assert_eq!(
            jansen_rit_drift(&p, t, &path, &a, 0.3).unwrap(),
            jansen_rit_drift(&p, t, &path, &b, 0.3).unwrap()
        );
    }
    let t = grid.knot(6);
    let path = AffinePathView::new(&path_data, 0, 3, 3, 7, grid).unwrap();
    let a = MeasurePathView::new(&first, 4, 3, 7, grid).unwrap();
    let b = MeasurePathView::new(&second, 4, 3, 7, grid).unwrap();
    assert_ne!(
        jansen_rit_drift(&p, t, &path, &a, 0.3).unwrap(),
        jansen_rit_drift(&p, t, &path, &b, 0.3).unwrap()
    );
}

#[test]
fn b0_matches_quadrature_at_reference_point() {
    let p = KellerSegelParams {
        epsilon: 0.1,
        chi: 1.0,
        lambda: 1.0,
        amplitude: 1.0,
        width: 1.0,
    };
    let rule = common::composite_rule(-8.0, 8.0, 64, 16);
    let closed = ks_b0(0.5, [1.0, 0.0], &p);
    let quad = common::b0_quadrature(0.5, [1.0, 0.0], &p, &rule);
    assert!((closed[0] - quad[0]).abs() <= 1e-6 && (closed[1] - quad[1]).abs() <= 1e-6);
    assert!(closed[0] < 0.0);
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    let (x, w) = common::gauss_legendre(8);
    let total: f64 = w.iter().sum();
    assert!((total - 2.0).abs() <= 1e-14);
    let x14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
    assert!((x14 - 2.0 / 15.0).abs() <= 1e-14);
}
