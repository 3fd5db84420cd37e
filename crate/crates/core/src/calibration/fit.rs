use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CalibrationDataset, CalibrationError, FootWrench, Result, SensorKind};
use crate::vec3::Vec3;

/// Per-output quadratic model: `y = C · features(input)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    pub kind: SensorKind,
    /// Feature order of the coefficient columns.
    pub features: Vec<String>,
    pub outputs: Vec<String>,
    /// One row per output.
    pub coefficients: Vec<Vec<f64>>,
    /// Cycles the model was fitted on; evaluation refuses to reuse them.
    pub train_cycles: Vec<u32>,
    pub train_rmse: Vec<f64>,
    pub train_samples: usize,
}

impl PolyModel {
    /// A model with all coefficients zero.
    pub fn zeros(kind: SensorKind) -> Self {
        Self {
            kind,
            features: kind.feature_names().iter().map(|s| s.to_string()).collect(),
            outputs: kind.output_names().iter().map(|s| s.to_string()).collect(),
            coefficients: vec![vec![0.0; kind.feature_count()]; kind.output_names().len()],
            train_cycles: Vec::new(),
            train_rmse: vec![0.0; kind.output_names().len()],
            train_samples: 0,
        }
    }

    /// Checks that a deserialized model is consistent with its kind.
    pub fn validate(&self) -> Result<()> {
        let names = self.kind.feature_names();
        if self.features.len() != names.len() || self.features.iter().zip(names).any(|(a, b)| a != b) {
            return Err(CalibrationError::Shape {
                expected: names.len(),
                got: self.features.len(),
            });
        }
        let n_out = self.kind.output_names().len();
        if self.coefficients.len() != n_out {
            return Err(CalibrationError::Shape {
                expected: n_out,
                got: self.coefficients.len(),
            });
        }
        for row in &self.coefficients {
            if row.len() != names.len() {
                return Err(CalibrationError::Shape {
                    expected: names.len(),
                    got: row.len(),
                });
            }
        }
        Ok(())
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.kind.input_len() {
            return Err(CalibrationError::Shape {
                expected: self.kind.input_len(),
                got: input.len(),
            });
        }
        let phi = self.kind.features(input);
        Ok(self
            .coefficients
            .iter()
            .map(|row| row.iter().zip(&phi).map(|(c, f)| c * f).sum())
            .collect())
    }

    pub fn apply_foot(&self, p: &Vec3) -> Result<FootWrench> {
        if self.kind != SensorKind::Foot {
            return Err(CalibrationError::KindMismatch {
                expected: self.kind,
                got: SensorKind::Foot,
            });
        }
        let y = self.predict(&p.to_array())?;
        Ok(FootWrench::new(y[0], y[1], y[2]))
    }

    pub fn apply_flow(&self, dp_x: f64, dp_y: f64) -> Result<f64> {
        if self.kind != SensorKind::Flow {
            return Err(CalibrationError::KindMismatch {
                expected: self.kind,
                got: SensorKind::Flow,
            });
        }
        Ok(self.predict(&[dp_x, dp_y])?[0])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRmse {
    pub name: String,
    pub unit: String,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub outputs: Vec<OutputRmse>,
    pub samples: usize,
}

impl RmseReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.outputs.iter().find(|o| o.name == name).map(|o| o.rmse)
    }
}

/// Ordinary least squares per output on the training split.
///
/// Columns are scaled to unit norm before an SVD; a numerical rank below
/// the feature count is an error that names the unresolved feature
/// combinations.
pub fn fit_poly(data: &CalibrationDataset) -> Result<PolyModel> {
    let kind = data.kind;
    let train = data.train();
    let m = kind.feature_count();
    let n = train.len();
    if n < m {
        return Err(CalibrationError::InsufficientSamples {
            kind,
            needed: m,
            got: n,
        });
    }
    let n_out = kind.output_names().len();
    let mut x = DMatrix::<f64>::zeros(n, m);
    let mut y = DMatrix::<f64>::zeros(n, n_out);
    for (i, s) in train.samples().iter().enumerate() {
        for (j, f) in kind.features(&s.input).into_iter().enumerate() {
            x[(i, j)] = f;
        }
        for (k, t) in s.target.iter().enumerate() {
            y[(i, k)] = *t;
        }
    }

    let scale: Vec<f64> = (0..m)
        .map(|j| {
            let c = x.column(j).norm();
            if c > 0.0 { c } else { 1.0 }
        })
        .collect();
    let mut xs = x.clone();
    for (j, s) in scale.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / s);
    }

    let svd = xs.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let tol = (n.max(m) as f64) * f64::EPSILON * smax * 1e3;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    if rank < m {
        let names = kind.feature_names();
        let directions = (0..m)
            .filter(|&i| sv[i] <= tol)
            .map(|i| {
                let row = v_t.row(i);
                let mut terms: Vec<(usize, f64)> = (0..m)
                    .map(|j| (j, row[j]))
                    .filter(|(_, v)| v.abs() > 0.1)
                    .collect();
                terms.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
                terms
                    .iter()
                    .map(|(j, v)| format!("{v:+.3}*{}", names[*j]))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        return Err(CalibrationError::RankDeficient {
            rank,
            expected: m,
            directions,
        });
    }
    let u = svd.u.as_ref().expect("requested U");
    // beta_scaled = V S^-1 U^T y
    let mut uty = u.transpose() * &y;
    for i in 0..m {
        uty.row_mut(i).scale_mut(1.0 / sv[i]);
    }
    let beta = v_t.transpose() * uty;

    let coefficients: Vec<Vec<f64>> = (0..n_out)
        .map(|k| (0..m).map(|j| beta[(j, k)] / scale[j]).collect())
        .collect();
    let resid = &y - &x * DMatrix::from_fn(m, n_out, |j, k| coefficients[k][j]);
    let train_rmse = (0..n_out)
        .map(|k| (resid.column(k).norm_squared() / n as f64).sqrt())
        .collect();

    Ok(PolyModel {
        kind,
        features: kind.feature_names().iter().map(|s| s.to_string()).collect(),
        outputs: kind.output_names().iter().map(|s| s.to_string()).collect(),
        coefficients,
        train_cycles: train.cycles().into_iter().collect(),
        train_rmse,
        train_samples: n,
    })
}

/// RMSE per output over the evaluation split of `eval_data`.
pub fn evaluate_rmse(model: &PolyModel, eval_data: &CalibrationDataset) -> Result<RmseReport> {
    if eval_data.kind != model.kind {
        return Err(CalibrationError::KindMismatch {
            expected: model.kind,
            got: eval_data.kind,
        });
    }
    let eval = eval_data.eval();
    if eval.is_empty() {
        return Err(CalibrationError::EmptyEval);
    }
    let trained: BTreeSet<u32> = model.train_cycles.iter().copied().collect();
    let shared: Vec<u32> = eval.cycles().intersection(&trained).copied().collect();
    if !shared.is_empty() {
        return Err(CalibrationError::OverlappingCycles(shared));
    }
    let n_out = model.outputs.len();
    let mut sq = vec![0.0; n_out];
    for s in eval.samples() {
        let pred = model.predict(&s.input)?;
        for k in 0..n_out {
            sq[k] += (pred[k] - s.target[k]).powi(2);
        }
    }
    let n = eval.len();
    Ok(RmseReport {
        outputs: (0..n_out)
            .map(|k| OutputRmse {
                name: model.outputs[k].clone(),
                unit: model.kind.output_units()[k].to_string(),
                rmse: (sq[k] / n as f64).sqrt(),
            })
            .collect(),
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{CalibrationSample, LoadType, Split};
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn foot_data(
        n: usize,
        seed: u64,
        truth: impl Fn(&Vec3) -> [f64; 3],
        noise: f64,
        split: impl Fn(usize) -> Split,
    ) -> CalibrationDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let samples = (0..n)
            .map(|i| {
                let p = Vec3::new(rng.random_range(-6.0..-4.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let t = truth(&p);
                CalibrationSample {
                    cycle_id: (i / 10) as u32,
                    load_type: LoadType::Normal,
                    split: split(i / 10),
                    input: p.to_array().to_vec(),
                    target: t.iter().map(|v| v + noise * normal.sample(&mut rng)).collect(),
                }
            })
            .collect();
        CalibrationDataset::new(SensorKind::Foot, samples).unwrap()
    }

    #[test]
    fn exact_recovery_of_a_single_square_term() {
        let data = foot_data(60, 1, |p| [0.0, 0.0, 2.0 * p.x * p.x], 0.0, |_| Split::Train);
        let model = fit_poly(&data).unwrap();
        for (j, c) in model.coefficients[2].iter().enumerate() {
            let want = if j == 4 { 2.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-9, "feature {j}: {c}");
        }
        let w = model.apply_foot(&Vec3::new(3.0, 0.0, 0.0)).unwrap();
        assert!((w.f_x - 18.0).abs() < 1e-8);
    }

    #[test]
    fn noisy_fit_is_within_three_standard_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let truth: Vec<[f64; 10]> = (0..3)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        let sigma = 0.01;
        let eval_truth = |p: &Vec3| {
            let phi = super::super::quad_features(p);
            std::array::from_fn(|k| truth[k].iter().zip(&phi).map(|(a, b)| a * b).sum())
        };
        let data = foot_data(500, 5, eval_truth, sigma, |_| Split::Train);
        let model = fit_poly(&data).unwrap();

        // standard errors from the normal equations, computed independently of the SVD path
        let x = DMatrix::from_fn(500, 10, |i, j| {
            let s = &data.samples()[i].input;
            super::super::quad_features(&Vec3::new(s[0], s[1], s[2]))[j]
        });
        let cov = (x.transpose() * &x).try_inverse().unwrap();
        for k in 0..3 {
            for j in 0..10 {
                let se = sigma * cov[(j, j)].sqrt();
                let err = (model.coefficients[k][j] - truth[k][j]).abs();
                assert!(err < 3.0 * se, "output {k} feature {j}: err {err} vs se {se}");
            }
        }
    }

    #[test]
    fn too_few_samples() {
        let data = foot_data(5, 2, |_| [0.0; 3], 0.0, |_| Split::Train);
        assert!(matches!(
            fit_poly(&data),
            Err(CalibrationError::InsufficientSamples { needed: 10, got: 5, .. })
        ));
    }

    #[test]
    fn rank_deficiency_names_the_direction() {
        let samples = (0..40)
            .map(|i| CalibrationSample {
                cycle_id: 0,
                load_type: LoadType::Normal,
                split: Split::Train,
                input: vec![-5.0 + 0.01 * i as f64, 0.0, 0.2 * (i % 3) as f64],
                target: vec![0.0, 0.0, i as f64],
            })
            .collect();
        let data = CalibrationDataset::new(SensorKind::Foot, samples).unwrap();
        match fit_poly(&data) {
            Err(CalibrationError::RankDeficient { rank, expected, directions }) => {
                assert_eq!(expected, 10);
                assert!(rank < 10);
                assert!(directions.iter().any(|d| d.contains("p_y")));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn zero_model_predicts_zero() {
        let m = PolyModel::zeros(SensorKind::Foot);
        assert_eq!(m.apply_foot(&Vec3::new(1.0, 2.0, 3.0)).unwrap(), FootWrench::default());
        assert!(matches!(m.apply_flow(0.1, 0.2), Err(CalibrationError::KindMismatch { .. })));
    }

    #[test]
    fn rmse_of_exact_and_offset_targets() {
        let f = |p: &Vec3| [p.x, p.y * p.z, 1.0 + p.x * p.x];
        let data = foot_data(80, 3, f, 0.0, |c| if c < 6 { Split::Train } else { Split::Eval });
        let model = fit_poly(&data).unwrap();
        let rep = evaluate_rmse(&model, &data).unwrap();
        assert!(rep.outputs.iter().all(|o| o.rmse < 1e-9));
        assert_eq!(rep.samples, 20);

        let shifted = foot_data(80, 3, |p| { let v = f(p); [v[0] + 0.5, v[1] - 0.5, v[2]] }, 0.0, |c| if c < 6 { Split::Train } else { Split::Eval });
        let rep = evaluate_rmse(&model, &shifted).unwrap();
        assert!((rep.get("tau_pitch").unwrap() - 0.5).abs() < 1e-9);
        assert!((rep.get("tau_yaw").unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn held_out_rmse_matches_recomputed_residuals() {
        let data = foot_data(120, 8, |p| [3.0 * p.y, -2.0 * p.z, p.x * p.x], 0.05, |c| if c < 10 { Split::Train } else { Split::Eval });
        let model = fit_poly(&data).unwrap();
        let rep = evaluate_rmse(&model, &data).unwrap();
        let eval = data.eval();
        let mut sq = 0.0;
        for s in eval.samples() {
            let w = model.apply_foot(&Vec3::new(s.input[0], s.input[1], s.input[2])).unwrap();
            sq += (w.f_x - s.target[2]).powi(2);
        }
        let expect = (sq / eval.len() as f64).sqrt();
        assert!((rep.get("f_x").unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn evaluation_rejects_training_cycles_and_empty_sets() {
        let data = foot_data(40, 4, |p| [p.x, p.y, p.z], 0.0, |_| Split::Train);
        let model = fit_poly(&data).unwrap();
        assert!(matches!(evaluate_rmse(&model, &data), Err(CalibrationError::EmptyEval)));
        let relabelled = foot_data(40, 4, |p| [p.x, p.y, p.z], 0.0, |_| Split::Eval);
        assert!(matches!(
            evaluate_rmse(&model, &relabelled),
            Err(CalibrationError::OverlappingCycles(_))
        ));
    }

    #[test]
    fn model_json_round_trip() {
        let data = foot_data(40, 6, |p| [p.x, p.y, p.z], 0.0, |_| Split::Train);
        let model = fit_poly(&data).unwrap();
        let back: PolyModel = serde_json::from_str(&model.to_json()).unwrap();
        back.validate().unwrap();
        assert_eq!(back, model);
        assert!(model.to_json().contains("\"p_x*p_y\""));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn perturbing_any_coefficient_raises_training_error(seed in 0u64..1000, j in 0usize..10, k in 0usize..3, sign in prop::bool::ANY) {
            let data = foot_data(60, seed, |p| [p.x * p.y, p.z, p.x], 0.1, |_| Split::Train);
            let model = fit_poly(&data).unwrap();
            let sse = |m: &PolyModel| -> f64 {
                data.samples().iter().map(|s| (m.predict(&s.input).unwrap()[k] - s.target[k]).powi(2)).sum()
            };
            let base = sse(&model);
            let mut bumped = model.clone();
            let eps = 1e-4 * if sign { 1.0 } else { -1.0 };
            bumped.coefficients[k][j] += eps;
            prop_assert!(sse(&bumped) > base);
        }
    }
}
