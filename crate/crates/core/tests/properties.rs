use nalgebra::DMatrix;
use proptest::prelude::*;
use tsscreen::bench::{self, ForecastConfig, ForecastModel, TargetTransform};
use tsscreen::data::TimeSeriesDataset;
use tsscreen::dgp::{self, PresetCase, PresetDist, PresetParams, SimDesign};
use tsscreen::penreg::{self, PathOptions};
use tsscreen::screen::{self, Method, Rule};

const N: usize = 50;
const P: usize = 20;

fn design(seed: u64, gamma: f64, alpha: f64) -> SimDesign {
    let params = PresetParams { gamma: Some(gamma), alpha, seed };
    let mut d = dgp::preset_design(PresetCase::C1, P, PresetDist::Gaussian, params).unwrap();
    d.n = N;
    d
}

fn method() -> impl Strategy<Value = Method> {
    prop_oneof![Just(Method::Sis), (0usize..8, any::<bool>()).prop_map(|(band, taper)| Method::Glss { band, taper })]
}

fn permutation() -> impl Strategy<Value = Vec<usize>> {
    Just((0..P).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scores_are_permutation_equivariant(
        seed in 0u64..1000, gamma in 0.0f64..0.8, alpha in -0.9f64..0.9, m in method(), perm in permutation(),
    ) {
        let sim = dgp::generate(&design(seed, gamma, alpha), 0).unwrap();
        let xp = DMatrix::from_fn(N, P, |i, j| sim.x[(i, perm[j])]);
        let a = screen::marginal_scores(&sim.x, &sim.y, m, true).unwrap().values;
        let b = screen::marginal_scores(&xp, &sim.y, m, true).unwrap().values;
        for j in 0..P {
            prop_assert!((b[j] - a[perm[j]]).abs() <= 1e-12 * a[perm[j]].abs().max(1.0));
        }
    }

    #[test]
    fn top_d_selections_are_nested(seed in 0u64..1000, alpha in -0.9f64..0.9, m in method()) {
        let sim = dgp::generate(&design(seed, 0.4, alpha), 0).unwrap();
        let mut prev: Vec<usize> = Vec::new();
        for d in 0..=P {
            let sel = screen::screen(&sim.x, &sim.y, m, true, Rule::Top { d }).unwrap().selected;
            prop_assert_eq!(sel.len(), d);
            prop_assert!(prev.iter().all(|j| sel.contains(j)));
            prev = sel;
        }
    }

    #[test]
    fn lasso_path_satisfies_kkt(seed in 0u64..1000, alpha in -0.9f64..0.9) {
        let sim = dgp::generate(&design(seed, 0.5, alpha), 0).unwrap();
        let path = penreg::lasso_path(&sim.x, &sim.y, &[1.0; P], PathOptions::with_grid(20)).unwrap();
        for (i, lambda) in path.lambdas.iter().enumerate() {
            prop_assert!(penreg::kkt_violation(&sim.x, &sim.y, &path.coefs[i], *lambda, &path.weights) < 1e-6);
        }
    }

    #[test]
    fn same_seed_same_data(seed in any::<u64>(), rep in 0u64..100) {
        let d = design(seed, 0.4, 0.6);
        let a = dgp::generate(&d, rep).unwrap();
        let b = dgp::generate(&d, rep).unwrap();
        prop_assert_eq!(a.x, b.x);
        prop_assert_eq!(a.y, b.y);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn forecasts_ignore_future_shocks(seed in 0u64..1000, shock_row in 30usize..N, size in -100.0f64..100.0) {
        let sim = dgp::generate(&design(seed, 0.5, 0.5), 0).unwrap();
        let mut cols = vec![sim.y.clone()];
        cols.extend((0..P).map(|j| sim.x.column(j).iter().copied().collect::<Vec<f64>>()));
        let mut names = vec!["y".to_string()];
        names.extend((0..P).map(|j| format!("x{j}")));
        let ds = TimeSeriesDataset::new(cols, Some(names)).unwrap();

        let mut cfg = ForecastConfig::new("y", ForecastModel::SisAdalasso, 20, 25);
        cfg.transform = TargetTransform::Rate;
        cfg.horizon = 2;
        cfg.lags = 2;
        cfg.factors = 2;
        let base = bench::rolling_forecast(&ds, &cfg).unwrap();
        let mut shocked = ds.clone();
        for c in shocked.columns.iter_mut() {
            c[shock_row] += size;
        }
        let after = bench::rolling_forecast(&shocked, &cfg).unwrap();
        for (a, b) in base.points.iter().zip(&after.points) {
            if a.origin < shock_row {
                prop_assert_eq!(a.forecast, b.forecast);
                prop_assert_eq!(a.benchmark, b.benchmark);
            }
        }
    }
}

#[test]
fn experiment_reports_do_not_depend_on_thread_count() {
    let d = design(3, 0.4, 0.6);
    let m = Method::Glss { band: 5, taper: true };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| bench::run_screen_experiment(&d, m, 10, 40).unwrap().without_timing())
    };
    assert_eq!(run(1), run(4));
    let mut other = d.clone();
    other.seed = 4;
    let c = bench::run_screen_experiment(&other, m, 10, 40).unwrap();
    assert_eq!(c.seed, 4);
}
