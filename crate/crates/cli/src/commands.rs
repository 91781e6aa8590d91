//! One function per subcommand. Each reads its JSON document, calls the
//! library and assembles a [`Report`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::json;

use supermoduli::geodesics::{
    integrate_geodesic, speed_norm, ChristoffelSource, Flat, HyperbolicHalfPlane, LaurentMetric, Metric, RestrictedMetric,
    Sphere,
};
use supermoduli::moduli::dims;
use supermoduli::moduli::equivalence::witness_residual;
use supermoduli::moduli::examples::{bubbling_chain, bubbling_sequence, log_scales};
use supermoduli::moduli::stable_maps::{admissible_partitions, check_stable_map, StableMapSkeleton};
use supermoduli::moduli::{check_gromov_curves, equivalent, normalize_vertex, Equivalence, NodalCurve, SequenceElement, SpecialPoint};
use supermoduli::superconf::{classify_fixing_with, pseudoinvariant, solve_three_points, Branch, ProjectivePoint, SpGL21};
use supermoduli::superlinalg::{standard_rank_form, SuperMatrix};
use supermoduli::trees::{count_by_edges, enumerate_stable, stabilize, LabeledTree};
use supermoduli::{GrassmannNumber, SDim};

use crate::config::Config;
use crate::error::CliError;
use crate::input::read_json;
use crate::output::{csv_table, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BranchArg {
    Plus,
    Minus,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Branch {
        match b {
            BranchArg::Plus => Branch::Plus,
            BranchArg::Minus => Branch::Minus,
        }
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TripleInput {
    points: [ProjectivePoint; 3],
    #[serde(default)]
    branch: Option<Branch>,
}

pub fn solve3pt(path: &Path, branch: Option<BranchArg>) -> Result<Report, CliError> {
    let input: TripleInput = read_json(path)?;
    let branch = branch.map(Branch::from).or(input.branch).unwrap_or_default();
    let [p1, p2, p3] = &input.points;
    let sol = solve_three_points(p1, p2, p3, branch).map_err(CliError::domain)?;
    let text = format!("branch {}\nepsilon {}\nmap\n{}", branch_name(branch), sol.epsilon, matrix_text(sol.map.matrix()));
    Report::new(json!({ "map": sol.map, "epsilon": sol.epsilon, "branch": branch }), text)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyInput {
    map: SpGL21,
    epsilon: GrassmannNumber,
    epsilon_prime: GrassmannNumber,
}

pub fn classify(path: &Path, cfg: &Config) -> Result<Report, CliError> {
    let input: ClassifyInput = read_json(path)?;
    let class = classify_fixing_with(&input.map, &input.epsilon, &input.epsilon_prime, cfg.projective_tolerance);
    Report::new(json!({ "class": class }), format!("{class:?}"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointsInput {
    points: [ProjectivePoint; 3],
}

pub fn pseudoinv(path: &Path) -> Result<Report, CliError> {
    let input: PointsInput = read_json(path)?;
    let [p1, p2, p3] = &input.points;
    let pair = pseudoinvariant(p1, p2, p3).map_err(CliError::domain)?;
    let text = format!("{{{}, {}}}", pair[0], pair[1]);
    Report::new(json!({ "pseudoinvariant": pair }), text)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalizeInput {
    curve: NodalCurve,
    vertex: usize,
    triple: [SpecialPoint; 3],
    #[serde(default)]
    branch: Option<Branch>,
}

pub fn normalize(path: &Path, branch: Option<BranchArg>) -> Result<Report, CliError> {
    let input: NormalizeInput = read_json(path)?;
    let branch = branch.map(Branch::from).or(input.branch).unwrap_or_default();
    let n = normalize_vertex(&input.curve, input.vertex, input.triple, branch).map_err(CliError::domain)?;
    let mut text = format!("vertex {} normalized, epsilon {}\n", input.vertex, n.epsilon);
    for (sp, p) in &n.remaining {
        let _ = writeln!(text, "{sp} = {p:?}");
    }
    let remaining: Vec<_> = n.remaining.iter().map(|(sp, p)| json!({ "point": sp, "value": p })).collect();
    Report::new(
        json!({
            "curve": n.curve,
            "epsilon": n.epsilon,
            "branch": n.branch,
            "frame": n.frame,
            "remaining": remaining,
        }),
        text,
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EquivInput {
    first: NodalCurve,
    second: NodalCurve,
}

/// Exit status 0 either way; the verdict is in the output.
pub fn equiv(path: &Path) -> Result<Report, CliError> {
    let input: EquivInput = read_json(path)?;
    match equivalent(&input.first, &input.second).map_err(CliError::domain)? {
        Equivalence::No => Report::new(json!({ "equivalent": false }), "not equivalent"),
        Equivalence::Yes(w) => {
            let residual = witness_residual(&input.first, &input.second, &w).map_err(CliError::domain)?;
            let text = format!(
                "equivalent\nvertex map {:?}\nreflected vertices {:?}\nwitness residual {residual:.3e}",
                w.hom.vertex_map, w.reflected
            );
            Report::new(json!({ "equivalent": true, "witness": w, "witness_residual": residual }), text)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Formula {
    M0k,
    M0t,
    Quotient,
    Groupoid,
    SuperJ,
    StableMaps,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct DimArgs {
    #[arg(long)]
    pub k: Option<i64>,
    /// Number of edges of the tree.
    #[arg(long)]
    pub edges: Option<i64>,
    /// Complex dimension of the target.
    #[arg(long)]
    pub n: Option<i64>,
    /// `⟨c₁(TX), A⟩`.
    #[arg(long)]
    pub c1a: Option<i64>,
    /// Space dimension as `even|odd`.
    #[arg(long, value_parser = parse_sdim)]
    pub m: Option<SDim>,
    /// Group dimension as `even|odd`.
    #[arg(long, value_parser = parse_sdim)]
    pub g: Option<SDim>,
    #[arg(long, value_parser = parse_sdim)]
    pub g0: Option<SDim>,
    #[arg(long, value_parser = parse_sdim)]
    pub g1: Option<SDim>,
}

pub fn parse_sdim(s: &str) -> Result<SDim, String> {
    let (a, b) = s.split_once('|').ok_or_else(|| format!("expected even|odd, got {s:?}"))?;
    let even = a.trim().parse().map_err(|_| format!("bad even part in {s:?}"))?;
    let odd = b.trim().parse().map_err(|_| format!("bad odd part in {s:?}"))?;
    Ok(SDim::new(even, odd))
}

fn need<T: Copy>(v: Option<T>, name: &str, formula: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Input(format!("--{name} is required for --formula {formula}")))
}

pub fn dims(formula: Formula, a: &DimArgs) -> Result<Report, CliError> {
    let d = match formula {
        Formula::M0k => dims::dim_m0k(need(a.k, "k", "m0k")?),
        Formula::M0t => dims::dim_m0t(need(a.k, "k", "m0t")?, need(a.edges, "edges", "m0t")?),
        Formula::Quotient => dims::dim_quotient(need(a.m, "m", "quotient")?, need(a.g, "g", "quotient")?),
        Formula::Groupoid => dims::dim_groupoid(need(a.g0, "g0", "groupoid")?, need(a.g1, "g1", "groupoid")?),
        Formula::SuperJ => dims::dim_super_j(need(a.n, "n", "super-j")?, need(a.c1a, "c1a", "super-j")?),
        Formula::StableMaps => dims::dim_stable_maps(
            need(a.n, "n", "stable-maps")?,
            need(a.c1a, "c1a", "stable-maps")?,
            need(a.k, "k", "stable-maps")?,
            need(a.edges, "edges", "stable-maps")?,
        ),
    }
    .map_err(CliError::domain)?;
    Ok(Report::new(d, d.to_string())?.with_csv(csv_table(&["even", "odd"], [[d.even.to_string(), d.odd.to_string()]])))
}

pub fn trees_enumerate(k: usize, max_vertices: Option<usize>) -> Result<Report, CliError> {
    let max = max_vertices.unwrap_or(k);
    let trees = enumerate_stable(k, max).map_err(CliError::domain)?;
    let mut by_edges: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &trees {
        *by_edges.entry(t.num_edges()).or_default() += 1;
    }
    if max >= k.saturating_sub(2) {
        debug_assert_eq!(by_edges, count_by_edges(k).unwrap_or_default());
    }
    let mut text = format!("{:>3} {:>4} {:>7}\n", "k", "#E", "count");
    for (e, c) in &by_edges {
        let _ = writeln!(text, "{k:>3} {e:>4} {c:>7}");
    }
    let _ = writeln!(text, "total {}", trees.len());
    for t in &trees {
        let _ = writeln!(text, "{}", t.canonical_form());
    }
    let listed: Vec<_> = trees.iter().map(|t| json!({ "tree": t, "canonical_form": t.canonical_form() })).collect();
    let counts: BTreeMap<String, usize> = by_edges.iter().map(|(e, c)| (e.to_string(), *c)).collect();
    let csv = csv_table(&["k", "edges", "count"], by_edges.iter().map(|(e, c)| [k.to_string(), e.to_string(), c.to_string()]));
    Ok(Report::new(json!({ "k": k, "count": trees.len(), "counts_by_edges": counts, "trees": listed }), text)?.with_csv(csv))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StabilizeInput {
    tree: LabeledTree,
    #[serde(default)]
    extra_special: BTreeMap<usize, usize>,
}

pub fn trees_stabilize(path: &Path) -> Result<Report, CliError> {
    let input: StabilizeInput = read_json(path)?;
    let st = stabilize(&input.tree, &input.extra_special).map_err(CliError::domain)?;
    let text = format!("{}\nvertex map {:?}", st.tree.canonical_form(), st.vertex_map);
    Report::new(json!({ "tree": st.tree, "vertex_map": st.vertex_map, "canonical_form": st.tree.canonical_form() }), text)
}

pub fn trees_canon(path: &Path) -> Result<Report, CliError> {
    let tree: LabeledTree = read_json(path)?;
    let form = tree.canonical_form();
    Report::new(
        json!({ "canonical_form": form, "stable": tree.is_stable(), "canonical_order": tree.canonical_order() }),
        form.clone(),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionInput {
    tree: LabeledTree,
    degree: u64,
}

pub fn partitions(path: &Path) -> Result<Report, CliError> {
    let input: PartitionInput = read_json(path)?;
    let parts = admissible_partitions(&input.tree, input.degree);
    let n = input.tree.num_vertices();
    let fmt = |p: &Vec<u64>| p.iter().map(u64::to_string).collect::<Vec<_>>();
    let text = parts.iter().map(|p| fmt(p).join(" ")).collect::<Vec<_>>().join("\n");
    let header: Vec<String> = (0..n).map(|v| format!("d{v}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv = csv_table(&header, parts.iter().map(fmt));
    Ok(Report::new(json!({ "count": parts.len(), "partitions": parts }), text)?.with_csv(csv))
}

pub fn check_map(path: &Path) -> Result<Report, CliError> {
    let skeleton: StableMapSkeleton = read_json(path)?;
    let report = check_stable_map(&skeleton);
    let mut text = String::from(if report.passed { "stable map: pass\n" } else { "stable map: FAIL\n" });
    for v in &report.violations {
        let _ = writeln!(text, "{v:?}");
    }
    let passed = report.passed;
    Ok(Report::new(report, text)?.passed(passed))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GromovInput {
    sequence: Vec<SequenceElement>,
    limit: NodalCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GromovExample {
    /// Two marked points colliding on one component.
    Bubbling,
    /// A bubble together with a fixed second component.
    Chain,
}

#[derive(Debug, Clone, clap::Args)]
pub struct GromovArgs {
    /// Sequence file `{"sequence": [...], "limit": curve}`.
    #[arg(required_unless_present = "example", conflicts_with = "example")]
    pub input: Option<PathBuf>,
    /// Run a built-in sequence instead of reading a file.
    #[arg(long, value_enum)]
    pub example: Option<GromovExample>,
    /// Scales of the built-in example are 10^first … 10^last.
    #[arg(long, default_value_t = 1.0)]
    pub first: f64,
    #[arg(long, default_value_t = 18.0)]
    pub last: f64,
    #[arg(long, default_value_t = 18)]
    pub steps: usize,
    /// Print the sequence document instead of checking it.
    #[arg(long, requires = "example")]
    pub emit: bool,
}

pub fn check_gromov(args: &GromovArgs, cfg: &Config) -> Result<Report, CliError> {
    let (seq, limit) = match (&args.input, args.example) {
        (Some(path), _) => {
            let input: GromovInput = read_json(path)?;
            (input.sequence, input.limit)
        }
        (None, Some(ex)) => {
            if args.steps == 0 {
                return Err(CliError::Input("--steps must be positive".into()));
            }
            let s = cfg.generators.max(1);
            let scales = log_scales(args.first, args.last, args.steps);
            match ex {
                GromovExample::Bubbling => bubbling_sequence(s, &scales),
                GromovExample::Chain => bubbling_chain(s, &scales),
            }
        }
        (None, None) => return Err(CliError::Input("an input file or --example is required".into())),
    };
    if args.emit {
        return Report::new(json!({ "sequence": seq, "limit": limit }), format!("{} sequence elements", seq.len()));
    }
    let report = check_gromov_curves(&seq, &limit, &cfg.gromov()).map_err(CliError::domain)?;
    let header = ["element", "rescaling", "nodal_points", "marked_points"];
    let rows = (0..seq.len()).map(|i| {
        let mut row = vec![i.to_string()];
        row.extend(report.clauses.iter().map(|c| format!("{:e}", c.residuals[i])));
        row
    });
    let csv = csv_table(&header, rows);
    let passed = report.passed;
    Ok(Report::new(&report, report.to_text())?.with_csv(csv).passed(passed))
}

#[derive(Debug, Clone, clap::Args)]
pub struct GeodesicArgs {
    /// `flat`, `sphere`, `hyperbolic`, or a JSON file with a Laurent metric.
    #[arg(long)]
    pub metric: String,
    /// Initial point: JSON array of numbers or Grassmann elements.
    #[arg(long, allow_hyphen_values = true)]
    pub p: String,
    /// Initial velocity, same format as `--p`.
    #[arg(long, allow_hyphen_values = true)]
    pub v: String,
    /// Integrate over `[−T, T]`.
    #[arg(long = "T", default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Even dimension of the flat metric.
    #[arg(long, default_value_t = 2)]
    pub even_dim: usize,
    /// Number of odd coordinate pairs of the built-in metrics.
    #[arg(long, default_value_t = 1)]
    pub odd_pairs: usize,
    /// Also write the body trajectory as CSV to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Coordinate {
    Real(f64),
    Element(GrassmannNumber),
}

fn parse_coordinates(what: &str, text: &str, s: usize) -> Result<Vec<GrassmannNumber>, CliError> {
    let raw: Vec<Coordinate> =
        crate::input::parse_json(text).map_err(|e| CliError::Input(format!("--{what}: {e}")))?;
    let mut out = Vec::with_capacity(raw.len());
    for (i, c) in raw.into_iter().enumerate() {
        out.push(match c {
            Coordinate::Real(x) => GrassmannNumber::real(s, x),
            Coordinate::Element(g) if g.num_generators() == s => g,
            Coordinate::Element(g) => {
                return Err(CliError::Input(format!(
                    "--{what}[{i}]: element over {} generators, expected {s}",
                    g.num_generators()
                )))
            }
        });
    }
    Ok(out)
}

fn load_metric(args: &GeodesicArgs) -> Result<Box<dyn Metric>, CliError> {
    Ok(match args.metric.as_str() {
        "flat" => Box::new(Flat { even: args.even_dim, odd_pairs: args.odd_pairs }),
        "sphere" => Box::new(Sphere { odd_pairs: args.odd_pairs }),
        "hyperbolic" => Box::new(HyperbolicHalfPlane { odd_pairs: args.odd_pairs }),
        file => {
            let laurent: LaurentMetric = read_json(Path::new(file))?;
            Box::new(RestrictedMetric::from_laurent(laurent).map_err(|e| CliError::Input(format!("{file}: {e}")))?)
        }
    })
}

pub fn geodesic(args: &GeodesicArgs, cfg: &Config) -> Result<Report, CliError> {
    let metric = load_metric(args)?;
    let s = cfg.generators;
    let p = parse_coordinates("p", &args.p, s)?;
    let v = parse_coordinates("v", &args.v, s)?;
    let src: &dyn ChristoffelSource = metric.as_ref();
    let sol = integrate_geodesic(src, &p, &v, args.t_max, args.step).map_err(CliError::domain)?;
    let speeds = speed_norm(&sol, metric.as_ref()).map_err(CliError::domain)?;
    let zero = sol.index_near(0.0);
    let drift = speeds.iter().map(|q| q.max_abs_diff(&speeds[zero])).fold(0.0, f64::max);

    let n = sol.positions.first().map_or(0, Vec::len);
    let header: Vec<String> = std::iter::once("t".to_string()).chain((0..n).map(|i| format!("x{i}"))).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = sol.times.iter().zip(sol.body_trajectory()).map(|(t, body)| {
        std::iter::once(format!("{t:e}")).chain(body.iter().map(|x| format!("{x:e}"))).collect::<Vec<_>>()
    });
    let csv = csv_table(&header, rows);
    if let Some(path) = &args.csv {
        std::fs::write(path, &csv).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    let last = sol.positions.last().map(|x| x.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(", "));
    let text = format!(
        "{} samples on [-{T}, {T}], step {:e}\nspeed drift {drift:.3e}\nx(T) = ({})",
        sol.len(),
        sol.step,
        last.unwrap_or_default(),
        T = args.t_max
    );
    Ok(Report::new(json!({ "solution": sol, "speed_drift": drift }), text)?.with_csv(csv))
}

pub fn rank_form(path: &Path) -> Result<Report, CliError> {
    let a: SuperMatrix = read_json(path)?;
    let r = standard_rank_form(&a).map_err(CliError::domain)?;
    let verified = r.verify(&a, 1e-8).map_err(CliError::domain)?;
    let text = format!("{:?}\nresidual {:.3e}\nverified {verified}", r.outcome, r.residual);
    Report::new(
        json!({ "outcome": r.outcome, "residual": r.residual, "verified": verified, "left": r.left, "right": r.right }),
        text,
    )
}

pub fn matrix_text(m: &SuperMatrix) -> String {
    m.entries()
        .iter()
        .map(|row| row.iter().map(|g| g.to_string()).collect::<Vec<_>>().join("  "))
        .collect::<Vec<_>>()
        .join("\n")
}
