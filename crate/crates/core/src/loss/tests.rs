use super::*;
use crate::element::{ClassScores, ElementGeometry, MapElement};
use crate::geometry::{GridSpec, Point2, Polygon, Polyline};
use crate::raster::{render_element_soft, SoftMask, Softness};

fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn grid(w: usize, h: usize) -> GridSpec {
    GridSpec::new(0.0, w as f64, 0.0, h as f64, w, h).unwrap()
}

fn tau(t: f64) -> Softness {
    Softness::new(t).unwrap()
}

fn line_elem(class_id: usize, pts: &[(f64, f64)]) -> MapElement {
    let line = Polyline::new(pts.iter().map(|&(x, y)| p(x, y)).collect()).unwrap();
    MapElement::new(class_id, ElementGeometry::Line(line))
}

fn poly_elem(class_id: usize, pts: &[(f64, f64)]) -> MapElement {
    let poly = Polygon::new(pts.iter().map(|&(x, y)| p(x, y)).collect()).unwrap();
    MapElement::new(class_id, ElementGeometry::Polygon(poly))
}

/// xorshift-style deterministic values in [0, 1).
struct Lcg(u64);
impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[test]
fn dice_identical_binary_masks_is_zero() {
    let g = grid(8, 8);
    let mut values = vec![0.0; 64];
    for v in values.iter_mut().take(20) {
        *v = 1.0;
    }
    let m = SoftMask::from_values(g, values).unwrap();
    let (loss, _) = dice_loss(&m, &m).unwrap();
    assert_eq!(loss, 0.0);
}

#[test]
fn dice_disjoint_hundred_pixel_masks() {
    let g = grid(16, 16);
    let mut a = vec![0.0; 256];
    let mut b = vec![0.0; 256];
    for i in 0..100 {
        a[i] = 1.0;
        b[156 + i] = 1.0;
    }
    let ma = SoftMask::from_values(g, a).unwrap();
    let mb = SoftMask::from_values(g, b).unwrap();
    let (loss, _) = dice_loss(&ma, &mb).unwrap();
    assert!((loss - (1.0 - 1.0 / 201.0)).abs() < 1e-15);
}

#[test]
fn dice_symmetric_and_bounded() {
    let mut rng = Lcg(7);
    let g = grid(8, 8);
    for _ in 0..20 {
        let a: Vec<f64> = (0..64).map(|_| rng.next()).collect();
        let b: Vec<f64> = (0..64).map(|_| rng.next()).collect();
        let ma = SoftMask::from_values(g, a).unwrap();
        let mb = SoftMask::from_values(g, b).unwrap();
        let (lab, _) = dice_loss(&ma, &mb).unwrap();
        let (lba, _) = dice_loss(&mb, &ma).unwrap();
        assert!((lab - lba).abs() < 1e-15);
        assert!((0.0..1.0).contains(&lab));
    }
}

#[test]
fn dice_matches_direct_recomputation_and_finite_differences() {
    let mut rng = Lcg(99);
    let g = grid(8, 8);
    let a: Vec<f64> = (0..64).map(|_| 0.05 + 0.9 * rng.next()).collect();
    let b: Vec<f64> = (0..64).map(|_| 0.05 + 0.9 * rng.next()).collect();
    let ma = SoftMask::from_values(g, a.clone()).unwrap();
    let mb = SoftMask::from_values(g, b.clone()).unwrap();
    let (loss, grad) = dice_loss(&ma, &mb).unwrap();

    // Independent scalar recomputation.
    let inter: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let expected =
        1.0 - (2.0 * inter + 1.0) / (a.iter().sum::<f64>() + b.iter().sum::<f64>() + 1.0);
    assert!((loss - expected).abs() < 1e-12);

    // Central finite differences over every pred pixel.
    let h = 1e-6;
    for i in 0..64 {
        let mut plus = a.clone();
        let mut minus = a.clone();
        plus[i] += h;
        minus[i] -= h;
        let lp = dice_loss(&SoftMask::from_values(g, plus).unwrap(), &mb)
            .unwrap()
            .0;
        let lm = dice_loss(&SoftMask::from_values(g, minus).unwrap(), &mb)
            .unwrap()
            .0;
        let fd = (lp - lm) / (2.0 * h);
        let rel = (grad[i] - fd).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
        assert!(rel < 1e-3, "pixel {i}: analytic {} vs fd {fd}", grad[i]);
    }
}

#[test]
fn dice_grid_mismatch_errors() {
    let ma = SoftMask::from_values(grid(8, 8), vec![0.0; 64]).unwrap();
    let mb = SoftMask::from_values(grid(4, 4), vec![0.0; 16]).unwrap();
    assert_eq!(dice_loss(&ma, &mb).unwrap_err(), LossError::GridMismatch);
}

#[test]
fn direction_collinear_is_zero() {
    let line = Polyline::new((0..5).map(|i| p(i as f64, 2.0 * i as f64)).collect()).unwrap();
    let (loss, grad) = direction_regularization(&line, DirectionForm::SmoothPenalty);
    assert!(loss.abs() < 1e-12);
    assert!(grad.iter().all(|g| g[0].abs() < 1e-9 && g[1].abs() < 1e-9));
}

#[test]
fn direction_right_angle_elbow() {
    let line = Polyline::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)]).unwrap();
    let (loss, _) = direction_regularization(&line, DirectionForm::SmoothPenalty);
    assert!((loss - 1.0).abs() < 1e-12);
}

#[test]
fn direction_fold_costs_two_per_joint() {
    let line = Polyline::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 0.0), p(1.0, 0.0)]).unwrap();
    let (loss, _) = direction_regularization(&line, DirectionForm::SmoothPenalty);
    assert!((loss - 4.0).abs() < 1e-12);
}

#[test]
fn direction_two_points_is_zero() {
    let line = Polyline::new(vec![p(0.0, 0.0), p(1.0, 0.0)]).unwrap();
    let (loss, grad) = direction_regularization(&line, DirectionForm::SmoothPenalty);
    assert_eq!(loss, 0.0);
    assert_eq!(grad.len(), 2);
}

#[test]
fn direction_raw_cosine_form() {
    let line = Polyline::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]).unwrap();
    let (loss, _) = direction_regularization(&line, DirectionForm::RawCosine);
    assert!((loss - 1.0).abs() < 1e-12);
}

#[test]
fn direction_rigid_motion_invariance() {
    let pts = [p(0.0, 0.0), p(1.0, 0.3), p(2.2, -0.4), p(2.9, 1.0)];
    let line = Polyline::new(pts.to_vec()).unwrap();
    let (base, _) = direction_regularization(&line, DirectionForm::SmoothPenalty);
    let (sin, cos) = 0.7_f64.sin_cos();
    let moved = Polyline::new(
        pts.iter()
            .map(|q| p(cos * q.x - sin * q.y + 5.0, sin * q.x + cos * q.y - 3.0))
            .collect(),
    )
    .unwrap();
    let (rotated, _) = direction_regularization(&moved, DirectionForm::SmoothPenalty);
    assert!((base - rotated).abs() < 1e-12);
}

#[test]
fn direction_gradient_matches_finite_differences() {
    let pts = vec![
        p(0.0, 0.0),
        p(1.1, 0.4),
        p(2.0, -0.2),
        p(3.2, 0.9),
        p(4.0, 0.1),
    ];
    for form in [DirectionForm::SmoothPenalty, DirectionForm::RawCosine] {
        let (_, grad) = direction_regularization_points(&pts, form);
        let h = 1e-6;
        for i in 0..pts.len() {
            for (axis, &an) in grad[i].iter().enumerate() {
                let mut plus = pts.clone();
                let mut minus = pts.clone();
                if axis == 0 {
                    plus[i].x += h;
                    minus[i].x -= h;
                } else {
                    plus[i].y += h;
                    minus[i].y -= h;
                }
                let lp = direction_regularization_points(&plus, form).0;
                let lm = direction_regularization_points(&minus, form).0;
                let fd = (lp - lm) / (2.0 * h);
                let rel = (an - fd).abs() / fd.abs().max(an.abs()).max(1e-6);
                assert!(rel < 1e-3, "{form:?} point {i} axis {axis}");
            }
        }
    }
}

#[test]
fn l1_equal_and_shifted_and_reversed() {
    let target: Vec<Point2> = (0..5).map(|i| p(i as f64, 0.0)).collect();
    assert_eq!(
        l1_regression_loss(&target, &target, L1Reduction::Mean).unwrap(),
        0.0
    );

    let shifted: Vec<Point2> = target.iter().map(|q| p(q.x + 1.0, q.y)).collect();
    assert_eq!(
        l1_regression_loss(&shifted, &target, L1Reduction::Mean).unwrap(),
        1.0
    );

    let reversed: Vec<Point2> = target.iter().rev().copied().collect();
    assert_eq!(
        l1_regression_loss(&reversed, &target, L1Reduction::Mean).unwrap(),
        0.0
    );

    assert!(l1_regression_loss(&target[..3], &target, L1Reduction::Mean).is_err());
}

#[test]
fn l1_sum_reduction_scales_by_count() {
    let target: Vec<Point2> = (0..4).map(|i| p(i as f64, 0.0)).collect();
    let shifted: Vec<Point2> = target.iter().map(|q| p(q.x, q.y + 0.5)).collect();
    assert_eq!(
        l1_regression_loss(&shifted, &target, L1Reduction::Sum).unwrap(),
        2.0
    );
}

#[test]
fn focal_saturated_prediction_vanishes() {
    let scores = ClassScores::new(vec![40.0, -40.0, -40.0]);
    let (loss, _) = focal_classification_loss(&scores, Some(0), FocalParams::default()).unwrap();
    assert!(loss < 1e-12);
}

#[test]
fn focal_degenerate_params_reduce_to_bce() {
    let scores = ClassScores::new(vec![0.3, -1.2, 2.0]);
    let params = FocalParams::new(1.0, 0.0).unwrap();
    let (loss, _) = focal_classification_loss(&scores, Some(1), params).unwrap();
    let bce: f64 = [(0.3, false), (-1.2, true), (2.0, false)]
        .iter()
        .map(|&(s, pos): &(f64, bool)| {
            let prob = 1.0 / (1.0 + (-s).exp());
            if pos {
                -prob.ln()
            } else {
                -(1.0 - prob).ln()
            }
        })
        .sum();
    assert!((loss - bce).abs() < 1e-12);
}

#[test]
fn focal_matches_direct_formula() {
    let scores = ClassScores::new(vec![0.7, -0.4, 1.3]);
    let (alpha, gamma) = (0.25, 2.0);
    let (loss, _) =
        focal_classification_loss(&scores, Some(2), FocalParams::new(alpha, gamma).unwrap())
            .unwrap();
    let mut expected = 0.0;
    for (c, &s) in [0.7_f64, -0.4, 1.3].iter().enumerate() {
        let prob = 1.0 / (1.0 + (-s).exp());
        if c == 2 {
            expected += -alpha * (1.0 - prob).powf(gamma) * prob.ln();
        } else {
            expected += -prob.powf(gamma) * (1.0 - prob).ln();
        }
    }
    assert!((loss - expected).abs() < 1e-12);
}

#[test]
fn focal_gradient_matches_finite_differences() {
    let base: [f64; 4] = [0.7, -0.4, 1.3, -2.0];
    for target in [Some(1), None] {
        let (_, grad) = focal_classification_loss(
            &ClassScores::new(base.to_vec()),
            target,
            FocalParams::default(),
        )
        .unwrap();
        let h = 1e-6;
        for i in 0..base.len() {
            let mut plus: Vec<f64> = base.to_vec();
            let mut minus: Vec<f64> = base.to_vec();
            plus[i] += h;
            minus[i] -= h;
            let lp =
                focal_classification_loss(&ClassScores::new(plus), target, FocalParams::default())
                    .unwrap()
                    .0;
            let lm =
                focal_classification_loss(&ClassScores::new(minus), target, FocalParams::default())
                    .unwrap()
                    .0;
            let fd = (lp - lm) / (2.0 * h);
            let rel = (grad[i] - fd).abs() / fd.abs().max(grad[i].abs()).max(1e-9);
            assert!(rel < 1e-4, "target {target:?} score {i}");
        }
    }
}

#[test]
fn focal_invalid_class_index_errors() {
    let scores = ClassScores::new(vec![0.0, 0.0]);
    assert!(matches!(
        focal_classification_loss(&scores, Some(2), FocalParams::default()),
        Err(LossError::InvalidClassIndex { .. })
    ));
}

#[test]
fn matching_cost_identical_saturated_approaches_zero_with_sharp_tau() {
    // The classification and regression terms are exactly zero; the dice
    // floor between identical soft masks vanishes in the sharp-tau limit.
    let g = grid(32, 32);
    let elem = line_elem(0, &[(4.0, 16.5), (28.0, 16.5)]);
    let scores = ClassScores::new(vec![40.0]);
    let mut params = MatchParams::new(&g, tau(0.05));
    params.weights = LossWeights::matching_default();
    let cost = matching_cost(&elem, &scores, &elem, &params).unwrap();
    assert!(cost < 0.02, "cost = {cost}");

    // At moderate tau the cost decomposes to exactly the weighted dice floor.
    let params2 = MatchParams::new(&g, tau(2.0));
    let cost2 = matching_cost(&elem, &scores, &elem, &params2).unwrap();
    let mask = render_element_soft(&elem.geometry, &g, tau(2.0));
    let (dice_floor, _) = dice_loss(&mask, &mask).unwrap();
    let expected =
        params2.weights.lambda1 * dice_floor + params2.weights.lambda2 * (1.0 - 40.0_f64.sigmoid());
    assert!((cost2 - expected).abs() < 1e-12);
}

#[test]
fn matching_cost_weight_zeroing_isolates_dice() {
    let g = grid(32, 32);
    let pred = line_elem(0, &[(4.0, 10.0), (28.0, 12.0)]);
    let gt = line_elem(0, &[(4.0, 14.0), (28.0, 14.0)]);
    let scores = ClassScores::new(vec![0.3]);
    let mut params = MatchParams::new(&g, tau(2.0));
    params.weights = LossWeights::new(1.0, 0.0, 0.0, 0.0).unwrap();
    let cost = matching_cost(&pred, &scores, &gt, &params).unwrap();
    let pm = render_element_soft(&pred.geometry, &g, tau(2.0));
    let gm = render_element_soft(&gt.geometry, &g, tau(2.0));
    assert!((cost - dice_loss(&pm, &gm).unwrap().0).abs() < 1e-12);
}

#[test]
fn matching_cost_kind_mismatch_is_large_finite() {
    let g = grid(16, 16);
    let pred = line_elem(0, &[(2.0, 2.0), (14.0, 2.0)]);
    let gt = poly_elem(0, &[(4.0, 4.0), (12.0, 4.0), (12.0, 12.0)]);
    let scores = ClassScores::new(vec![0.0]);
    let params = MatchParams::new(&g, tau(2.0));
    let cost = matching_cost(&pred, &scores, &gt, &params).unwrap();
    assert_eq!(cost, params.mismatch_cost);
    assert!(cost.is_finite());
}

#[test]
fn matching_cost_matrix_matches_per_pair_evaluation() {
    let g = grid(32, 32);
    let preds = vec![
        (
            line_elem(0, &[(2.0, 4.0), (30.0, 6.0)]),
            ClassScores::new(vec![0.8, -0.2]),
        ),
        (
            line_elem(1, &[(2.0, 16.0), (30.0, 18.0)]),
            ClassScores::new(vec![-0.5, 1.4]),
        ),
        (
            poly_elem(1, &[(8.0, 20.0), (24.0, 20.0), (24.0, 30.0), (8.0, 30.0)]),
            ClassScores::new(vec![0.1, 0.2]),
        ),
    ];
    let gts = vec![
        line_elem(0, &[(2.0, 5.0), (30.0, 5.0)]),
        poly_elem(1, &[(10.0, 22.0), (22.0, 22.0), (22.0, 28.0), (10.0, 28.0)]),
        line_elem(1, &[(2.0, 17.0), (30.0, 17.0)]),
    ];
    let params = MatchParams::new(&g, tau(2.0));
    let matrix = matching_cost_matrix(&preds, &gts, &params).unwrap();
    for (i, (pe, ps)) in preds.iter().enumerate() {
        for (j, gt) in gts.iter().enumerate() {
            let single = matching_cost(pe, ps, gt, &params).unwrap();
            assert!(
                (matrix.get(i, j) - single).abs() < 1e-12,
                "entry ({i}, {j}): {} vs {single}",
                matrix.get(i, j)
            );
        }
    }
}

#[test]
fn loss_weights_validation() {
    assert!(LossWeights::new(0.0, 0.0, 0.0, 0.0).is_err());
    assert!(LossWeights::new(-1.0, 2.0, 0.0, 0.0).is_err());
    assert!(LossWeights::<f64>::new(2.0, 2.0, 0.005, 0.05).is_ok());
}

fn demo_scene() -> (Vec<Prediction>, Vec<MapElement>) {
    let preds = vec![
        Prediction {
            element: line_elem(0, &[(3.1, 5.4), (12.2, 6.3), (20.3, 4.8), (28.9, 5.9)]),
            scores: ClassScores::new(vec![0.9, -0.7]),
        },
        Prediction {
            element: poly_elem(1, &[(8.4, 14.2), (22.8, 14.9), (23.4, 26.1), (9.2, 25.3)]),
            scores: ClassScores::new(vec![-0.4, 1.1]),
        },
    ];
    let gts = vec![
        line_elem(0, &[(3.0, 6.0), (12.0, 6.0), (20.0, 6.0), (29.0, 6.0)]),
        poly_elem(1, &[(9.0, 15.0), (23.0, 15.0), (23.0, 25.0), (9.0, 25.0)]),
    ];
    (preds, gts)
}

#[test]
fn total_loss_perfect_scene_reduces_to_dice_floor_and_vanishes_sharp() {
    let g = grid(32, 32);
    // The square is equilateral so ring-resampling 4 points reproduces its
    // vertices exactly and the regression term is identically zero.
    let gts = vec![
        line_elem(0, &[(4.0, 8.5), (28.0, 8.5)]),
        poly_elem(1, &[(8.0, 14.0), (24.0, 14.0), (24.0, 30.0), (8.0, 30.0)]),
    ];
    let preds: Vec<Prediction> = gts
        .iter()
        .enumerate()
        .map(|(i, e)| Prediction {
            element: e.clone(),
            scores: ClassScores::new(if i == 0 {
                vec![40.0, -40.0]
            } else {
                vec![-40.0, 40.0]
            }),
        })
        .collect();
    let assignment = Assignment::new(vec![(0, 0), (1, 1)]).unwrap();

    // At moderate tau every term except the dice self-floor is zero.
    let params = SceneLossParams::new(&g, tau(2.0));
    let out = total_loss(&preds, &gts, &assignment, &params).unwrap();
    let floor: f64 = gts
        .iter()
        .map(|e| {
            let m = render_element_soft(&e.geometry, &g, tau(2.0));
            dice_loss(&m, &m).unwrap().0
        })
        .sum();
    assert!((out.total - params.weights.lambda1 * floor).abs() < 1e-9);

    // Sharp-tau limit: the loss itself goes to zero.
    let sharp = SceneLossParams::new(&g, tau(0.05));
    let out_sharp = total_loss(&preds, &gts, &assignment, &sharp).unwrap();
    assert!(out_sharp.total < 0.05, "total = {}", out_sharp.total);
}

#[test]
fn total_loss_dice_only_weights_sum_matched_dice() {
    let g = grid(32, 32);
    let (preds, gts) = demo_scene();
    let assignment = Assignment::new(vec![(0, 0), (1, 1)]).unwrap();
    let mut params = SceneLossParams::new(&g, tau(2.0));
    params.weights = LossWeights::new(1.0, 0.0, 0.0, 0.0).unwrap();
    let out = total_loss(&preds, &gts, &assignment, &params).unwrap();
    let expected: f64 = [(0usize, 0usize), (1, 1)]
        .iter()
        .map(|&(pi, gi)| {
            let pm = render_element_soft(&preds[pi].element.geometry, &g, tau(2.0));
            let gm = render_element_soft(&gts[gi].geometry, &g, tau(2.0));
            dice_loss(&pm, &gm).unwrap().0
        })
        .sum();
    assert!((out.total - expected).abs() < 1e-12);
}

#[test]
fn total_loss_point_gradients_match_finite_differences() {
    let g = grid(32, 32);
    let (preds, gts) = demo_scene();
    let assignment = Assignment::new(vec![(0, 0), (1, 1)]).unwrap();
    let params = SceneLossParams::new(&g, tau(2.0));
    let base = total_loss(&preds, &gts, &assignment, &params).unwrap();

    // Perturbations in pixel units (unit pitch here, so world == px).
    let h = 1e-3;
    for (pi, pred) in preds.iter().enumerate() {
        let pts = pred.element.geometry.points().to_vec();
        for i in 0..pts.len() {
            for axis in 0..2 {
                let eval = |delta: f64| {
                    let mut moved = pts.clone();
                    if axis == 0 {
                        moved[i].x += delta;
                    } else {
                        moved[i].y += delta;
                    }
                    let mut preds2 = preds.clone();
                    preds2[pi].element.geometry = pred.element.geometry.with_points(moved).unwrap();
                    total_loss(&preds2, &gts, &assignment, &params)
                        .unwrap()
                        .total
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                let an = base.point_grads[pi][i][axis];
                let rel = (an - fd).abs() / fd.abs().max(an.abs()).max(1e-6);
                assert!(rel < 1e-3, "pred {pi} point {i} axis {axis}: {an} vs {fd}");
            }
        }
    }

    // Score gradients through the focal term.
    let h = 1e-5;
    for (pi, pred) in preds.iter().enumerate() {
        for c in 0..pred.scores.len() {
            let eval = |delta: f64| {
                let mut scores = pred.scores.scores().to_vec();
                scores[c] += delta;
                let mut preds2 = preds.clone();
                preds2[pi].scores = ClassScores::new(scores);
                total_loss(&preds2, &gts, &assignment, &params)
                    .unwrap()
                    .total
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let an = base.score_grads[pi][c];
            let rel = (an - fd).abs() / fd.abs().max(an.abs()).max(1e-9);
            assert!(rel < 1e-3, "pred {pi} score {c}: {an} vs {fd}");
        }
    }
}

#[test]
fn total_loss_descends_along_negative_gradient() {
    let g = grid(32, 32);
    let (preds, gts) = demo_scene();
    let assignment = Assignment::new(vec![(0, 0), (1, 1)]).unwrap();
    let params = SceneLossParams::new(&g, tau(2.0));
    let base = total_loss(&preds, &gts, &assignment, &params).unwrap();

    let max_g = base
        .point_grads
        .iter()
        .flatten()
        .flat_map(|g| [g[0].abs(), g[1].abs()])
        .fold(0.0_f64, f64::max);
    assert!(max_g > 0.0);
    let step = 1e-4 / max_g;

    let mut moved_preds = preds.clone();
    for (pi, pred) in preds.iter().enumerate() {
        let pts: Vec<Point2> = pred
            .element
            .geometry
            .points()
            .iter()
            .enumerate()
            .map(|(i, q)| {
                p(
                    q.x - step * base.point_grads[pi][i][0] * g.dx(),
                    q.y - step * base.point_grads[pi][i][1] * g.dy(),
                )
            })
            .collect();
        moved_preds[pi].element.geometry = pred.element.geometry.with_points(pts).unwrap();
    }
    let moved = total_loss(&moved_preds, &gts, &assignment, &params).unwrap();
    assert!(
        moved.total <= base.total + 1e-8,
        "{} vs {}",
        moved.total,
        base.total
    );
}

#[test]
fn total_loss_unmatched_prediction_pays_background_classification() {
    let g = grid(32, 32);
    let (preds, gts) = demo_scene();
    let assignment = Assignment::new(vec![(0, 0)]).unwrap();
    let params = SceneLossParams::new(&g, tau(2.0));
    let out = total_loss(&preds, &gts, &assignment, &params).unwrap();
    let (bg, _) = focal_classification_loss(&preds[1].scores, None, params.focal).unwrap();
    let matched_only = total_loss(&preds[..1], &gts, &assignment, &params).unwrap();
    assert!((out.total - (matched_only.total + params.weights.lambda2 * bg)).abs() < 1e-12);
}

#[test]
fn total_loss_rejects_out_of_range_assignment() {
    let g = grid(16, 16);
    let (preds, gts) = demo_scene();
    let assignment = Assignment::new(vec![(0, 5)]).unwrap();
    let params = SceneLossParams::new(&g, tau(2.0));
    assert!(matches!(
        total_loss(&preds, &gts, &assignment, &params),
        Err(LossError::InvalidAssignment { .. })
    ));
}
