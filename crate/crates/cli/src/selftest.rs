//! Built-in example cases with known answers.

use serde::Serialize;
use serde_json::json;

use supermoduli::geodesics::{integrate_geodesic, speed_norm, Flat, Sphere};
use supermoduli::moduli::dims::{dim_m0k, dim_stable_maps};
use supermoduli::moduli::examples::{bubbling_sequence, log_scales};
use supermoduli::moduli::{check_gromov_curves, GromovConfig};
use supermoduli::superconf::{solve_three_points, standard_triple, Branch, SpGL21};
use supermoduli::superlinalg::{standard_rank_form, RankOutcome, SuperMatrix};
use supermoduli::trees::{enumerate_stable, stabilize, LabeledTree};
use supermoduli::{GrassmannNumber, Parity, SDim};

use crate::error::CliError;
use crate::output::{csv_table, Report};

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Case = fn() -> Result<String, String>;

fn check(cond: bool, detail: String) -> Result<String, String> {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn sqrt_series() -> Result<String, String> {
    let s = 4;
    let eta = |i| GrassmannNumber::generator(s, i).expect("in range");
    let a = &(&GrassmannNumber::one(s) + &(&eta(1) * &eta(2))) + &(&eta(3) * &eta(4));
    let r = a.sqrt_even().map_err(e)?;
    let want = GrassmannNumber::from_terms(
        s,
        [(vec![], 1.0.into()), (vec![1, 2], 0.5.into()), (vec![3, 4], 0.5.into()), (vec![1, 2, 3, 4], (-0.25).into())],
    )
    .map_err(e)?;
    let d = r.max_abs_diff(&want);
    check(d < 1e-14, format!("sqrt(1 + η1η2 + η3η4) off by {d:.1e}"))
}

fn dimensions() -> Result<String, String> {
    let a = dim_m0k(3).map_err(e)?;
    let b = dim_stable_maps(1, 2, 3, 0).map_err(e)?;
    check(a == SDim::new(0, 2) && b == SDim::new(6, 6), format!("dim M_0,3 = {a}, stable maps (1,2,3,0) = {b}"))
}

fn tree_counts() -> Result<String, String> {
    let counts: Vec<usize> = (3..=6).map(|k| enumerate_stable(k, k).map(|t| t.len())).collect::<Result<_, _>>().map_err(e)?;
    check(counts == [1, 4, 26, 236], format!("stable trees for k=3..6: {counts:?}"))
}

fn stabilize_path() -> Result<String, String> {
    let path = LabeledTree::new(3, [(0, 1), (1, 2)], [(1, 1), (2, 1), (3, 1)]).map_err(e)?;
    let st = stabilize(&path, &Default::default()).map_err(e)?;
    check(
        st.tree.num_vertices() == 1 && st.tree.num_labels() == 3,
        format!("path of three collapses to {} vertex(es)", st.tree.num_vertices()),
    )
}

fn standard_triple_solves_to_identity() -> Result<String, String> {
    let s = 2;
    let [p1, p2, p3] = standard_triple(&GrassmannNumber::zero(s)).map_err(e)?;
    let sol = solve_three_points(&p1, &p2, &p3, Branch::Plus).map_err(e)?;
    let d = sol.map.distance_up_to_sign(&SpGL21::identity(s));
    check(d < 1e-12 && sol.epsilon.is_zero(), format!("distance to identity {d:.1e}, ε = {}", sol.epsilon))
}

fn odd_translation_has_no_rank() -> Result<String, String> {
    let eta = GrassmannNumber::generator(1, 1).map_err(e)?;
    let m = SuperMatrix::new(SDim::new(0, 1), SDim::new(1, 0), Parity::Even, vec![vec![eta]]).map_err(e)?;
    let r = standard_rank_form(&m).map_err(e)?;
    check(matches!(r.outcome, RankOutcome::NoRank { .. }), format!("[η1] gives {:?}", r.outcome))
}

fn bubbling_converges() -> Result<String, String> {
    let (seq, limit) = bubbling_sequence(2, &log_scales(1.0, 18.0, 18));
    let r = check_gromov_curves(&seq, &limit, &GromovConfig::default()).map_err(e)?;
    let tails: Vec<String> = r.clauses.iter().map(|c| format!("{:.1e}", c.tail_max)).collect();
    check(r.passed, format!("tail residuals {}", tails.join(", ")))
}

fn flat_and_sphere_geodesics() -> Result<String, String> {
    let s = 2;
    let eta = |i| GrassmannNumber::generator(s, i).expect("in range");
    let p = vec![GrassmannNumber::real(s, 1.0), GrassmannNumber::real(s, 0.2), eta(1), GrassmannNumber::zero(s)];
    let v = vec![GrassmannNumber::real(s, 0.3), GrassmannNumber::real(s, 0.8), GrassmannNumber::zero(s), eta(2)];
    let line = integrate_geodesic(&Flat { even: 2, odd_pairs: 1 }, &p, &v, 1.0, 0.01).map_err(e)?;
    let end = line.positions.last().expect("samples");
    let flat_err = (0..4).map(|a| end[a].max_abs_diff(&(&p[a] + &v[a]))).fold(0.0, f64::max);
    let sphere = Sphere { odd_pairs: 1 };
    let sol = integrate_geodesic(&sphere, &p, &v, 1.0, 1e-3).map_err(e)?;
    let speeds = speed_norm(&sol, &sphere).map_err(e)?;
    let drift = speeds.iter().map(|q| q.max_abs_diff(&speeds[0])).fold(0.0, f64::max);
    check(flat_err < 1e-12 && drift < 1e-8, format!("flat endpoint error {flat_err:.1e}, sphere speed drift {drift:.1e}"))
}

const CASES: [(&str, Case); 8] = [
    ("sqrt_even series", sqrt_series),
    ("dimension formulas", dimensions),
    ("stable tree counts", tree_counts),
    ("stabilize path", stabilize_path),
    ("standard triple", standard_triple_solves_to_identity),
    ("odd translation rank", odd_translation_has_no_rank),
    ("bubbling convergence", bubbling_converges),
    ("geodesics", flat_and_sphere_geodesics),
];

pub fn run() -> Vec<CaseResult> {
    CASES
        .iter()
        .map(|(name, case)| match case() {
            Ok(detail) => CaseResult { name, passed: true, detail },
            Err(detail) => CaseResult { name, passed: false, detail },
        })
        .collect()
}

pub fn report() -> Result<Report, CliError> {
    let results = run();
    let passed = results.iter().all(|r| r.passed);
    let text: String = results
        .iter()
        .map(|r| format!("{} {:<24} {}\n", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail))
        .collect();
    let csv = csv_table(
        &["case", "passed", "detail"],
        results.iter().map(|r| [r.name.to_string(), r.passed.to_string(), format!("\"{}\"", r.detail.replace('"', "'"))]),
    );
    Ok(Report::new(json!({ "passed": passed, "cases": results }), text)?.with_csv(csv).passed(passed))
}
