use milp::{MilpModel, Sense};

pub struct HandLp {
    pub name: &'static str,
    pub model: MilpModel,
    /// `None` when the LP is infeasible.
    pub optimum: Option<f64>,
}

fn build(
    name: &'static str,
    objective: &[f64],
    rows: &[(&[f64], Sense, f64)],
    bounds: &[(f64, f64)],
    optimum: Option<f64>,
) -> HandLp {
    let mut model = MilpModel::new();
    let vars: Vec<_> = (0..objective.len())
        .map(|j| {
            let (lo, hi) = bounds[j.min(bounds.len() - 1)];
            model.add_continuous(format!("x{j}"), lo, hi)
        })
        .collect();
    for (i, (coefs, sense, rhs)) in rows.iter().enumerate() {
        model.add_constraint(
            format!("r{i}"),
            vars.iter().zip(coefs.iter()).map(|(&v, &a)| (v, a)),
            *sense,
            *rhs,
        );
    }
    model.set_objective(vars.iter().zip(objective).map(|(&v, &c)| (v, c)));
    HandLp {
        name,
        model,
        optimum,
    }
}

/// Small LPs with known optima, including degenerate and infeasible ones.
pub fn cases() -> Vec<HandLp> {
    vec![
        build(
            "single_var",
            &[1.0],
            &[(&[1.0], Sense::Le, 3.0)],
            &[(0.0, 10.0)],
            Some(3.0),
        ),
        build(
            "unit_simplex",
            &[1.0, 1.0],
            &[(&[1.0, 1.0], Sense::Le, 1.0)],
            &[(0.0, 1.0), (0.0, 1.0)],
            Some(1.0),
        ),
        build(
            "contradictory",
            &[1.0],
            &[(&[1.0], Sense::Ge, 2.0), (&[1.0], Sense::Le, 1.0)],
            &[(0.0, 10.0)],
            None,
        ),
        build(
            "two_row_vertex",
            &[3.0, 2.0],
            &[(&[1.0, 1.0], Sense::Le, 4.0), (&[1.0, 3.0], Sense::Le, 6.0)],
            &[(0.0, 3.0), (0.0, 10.0)],
            Some(11.0),
        ),
        build(
            "degenerate_vertex",
            &[1.0, 1.0],
            &[
                (&[1.0, 1.0], Sense::Le, 1.0),
                (&[1.0, -1.0], Sense::Le, 1.0),
                (&[1.0, 0.0], Sense::Le, 1.0),
            ],
            &[(0.0, 5.0), (0.0, 5.0)],
            Some(1.0),
        ),
        build(
            "equality_row",
            &[1.0, -1.0],
            &[(&[1.0, 1.0], Sense::Eq, 2.0)],
            &[(0.0, 5.0), (0.0, 5.0)],
            Some(2.0),
        ),
        build(
            "covering_min",
            &[-1.0, -1.0],
            &[(&[1.0, 2.0], Sense::Ge, 4.0), (&[3.0, 1.0], Sense::Ge, 6.0)],
            &[(0.0, 10.0), (0.0, 10.0)],
            Some(-2.8),
        ),
        build(
            "infeasible_equality",
            &[1.0, 1.0],
            &[(&[1.0, 1.0], Sense::Eq, 3.0)],
            &[(0.0, 1.0), (0.0, 1.0)],
            None,
        ),
        build(
            "infeasible_cover",
            &[1.0, 1.0],
            &[(&[1.0, 1.0], Sense::Ge, 5.0)],
            &[(0.0, 2.0), (0.0, 2.0)],
            None,
        ),
        build("bounds_only", &[1.0], &[], &[(-5.0, -1.0)], Some(-1.0)),
        build(
            "negative_range",
            &[-1.0, 0.0],
            &[(&[1.0, 1.0], Sense::Ge, 0.0)],
            &[(-2.0, 3.0), (0.0, 1.0)],
            Some(1.0),
        ),
        build(
            "klee_minty",
            &[4.0, 2.0, 1.0],
            &[
                (&[1.0, 0.0, 0.0], Sense::Le, 5.0),
                (&[4.0, 1.0, 0.0], Sense::Le, 25.0),
                (&[8.0, 4.0, 1.0], Sense::Le, 125.0),
            ],
            &[(0.0, 200.0), (0.0, 200.0), (0.0, 200.0)],
            Some(125.0),
        ),
        build(
            "pairwise_packing",
            &[1.0, 1.0, 1.0, 1.0],
            &[
                (&[1.0, 1.0, 0.0, 0.0], Sense::Le, 1.0),
                (&[1.0, 0.0, 1.0, 0.0], Sense::Le, 1.0),
                (&[1.0, 0.0, 0.0, 1.0], Sense::Le, 1.0),
                (&[0.0, 1.0, 1.0, 0.0], Sense::Le, 1.0),
                (&[0.0, 1.0, 0.0, 1.0], Sense::Le, 1.0),
                (&[0.0, 0.0, 1.0, 1.0], Sense::Le, 1.0),
            ],
            &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
            Some(2.0),
        ),
        build(
            "transportation",
            &[-2.0, -3.0, -1.0, -5.0, -4.0, -2.0],
            &[
                (&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0], Sense::Le, 20.0),
                (&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], Sense::Le, 30.0),
                (&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0], Sense::Ge, 10.0),
                (&[0.0, 1.0, 0.0, 0.0, 1.0, 0.0], Sense::Ge, 25.0),
                (&[0.0, 0.0, 1.0, 0.0, 0.0, 1.0], Sense::Ge, 15.0),
            ],
            &[
                (0.0, 50.0),
                (0.0, 50.0),
                (0.0, 50.0),
                (0.0, 50.0),
                (0.0, 50.0),
                (0.0, 50.0),
            ],
            Some(-140.0),
        ),
        build(
            "redundant_equalities",
            &[1.0, 2.0],
            &[(&[1.0, 1.0], Sense::Eq, 1.0), (&[2.0, 2.0], Sense::Eq, 2.0)],
            &[(0.0, 1.0), (0.0, 1.0)],
            Some(2.0),
        ),
        build(
            "fixed_variable",
            &[1.0, 1.0],
            &[(&[1.0, 1.0], Sense::Le, 3.0)],
            &[(2.0, 2.0), (0.0, 5.0)],
            Some(3.0),
        ),
        build(
            "zero_objective",
            &[0.0, 0.0],
            &[(&[1.0, 1.0], Sense::Le, 1.0)],
            &[(0.0, 1.0), (0.0, 1.0)],
            Some(0.0),
        ),
        build(
            "diet",
            &[-0.6, -0.35, -0.5],
            &[
                (&[5.0, 7.0, 3.0], Sense::Ge, 20.0),
                (&[4.0, 2.0, 8.0], Sense::Ge, 15.0),
                (&[1.0, 3.0, 2.0], Sense::Le, 12.0),
            ],
            &[(0.0, 10.0), (0.0, 10.0), (0.0, 10.0)],
            Some(-1.455),
        ),
        build(
            "beale_cycling",
            &[0.75, -20.0, 0.5, -6.0],
            &[
                (&[0.25, -8.0, -1.0, 9.0], Sense::Le, 0.0),
                (&[0.5, -12.0, -0.5, 3.0], Sense::Le, 0.0),
                (&[0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0),
            ],
            &[(0.0, 100.0), (0.0, 100.0), (0.0, 100.0), (0.0, 100.0)],
            Some(1.25),
        ),
        build(
            "infeasible_triangle",
            &[1.0, 1.0, 1.0],
            &[
                (&[1.0, 1.0, 0.0], Sense::Ge, 3.0),
                (&[0.0, 1.0, 1.0], Sense::Ge, 3.0),
                (&[1.0, 0.0, 1.0], Sense::Ge, 3.0),
                (&[1.0, 1.0, 1.0], Sense::Le, 4.0),
            ],
            &[(0.0, 10.0), (0.0, 10.0), (0.0, 10.0)],
            None,
        ),
        build(
            "badly_scaled",
            &[1.0, 1.0],
            &[(&[1000.0, 1.0], Sense::Le, 1000.5)],
            &[(0.0, 1.0), (0.0, 1.0)],
            Some(1.9995),
        ),
        build(
            "free_range_link",
            &[0.0, 1.0],
            &[(&[-1.0, 1.0], Sense::Eq, 0.0)],
            &[(-3.0, 2.0), (-10.0, 10.0)],
            Some(2.0),
        ),
        build(
            "dual_degenerate_ties",
            &[1.0, 1.0, 1.0],
            &[
                (&[1.0, 1.0, 1.0], Sense::Le, 2.0),
                (&[1.0, 0.0, 0.0], Sense::Le, 1.0),
                (&[0.0, 1.0, 0.0], Sense::Le, 1.0),
            ],
            &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
            Some(2.0),
        ),
        build(
            "mixed_senses",
            &[2.0, -1.0, 3.0],
            &[
                (&[1.0, 1.0, 1.0], Sense::Eq, 6.0),
                (&[1.0, -1.0, 0.0], Sense::Ge, -2.0),
                (&[0.0, 1.0, 1.0], Sense::Le, 5.0),
                (&[1.0, 0.0, -1.0], Sense::Le, 1.0),
            ],
            &[(0.0, 10.0), (0.0, 10.0), (0.0, 10.0)],
            Some(17.0),
        ),
    ]
}
