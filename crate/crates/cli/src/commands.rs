//! One function per subcommand, each returning results and checks.

use bohr_roth::bohr::BohrSet;
use bohr_roth::counting::{enumerate_solutions, is_solution, progressions_dichotomy, t_functional, Method};
use bohr_roth::endo::{Endomorphism, EquationSystem};
use bohr_roth::group::{FiniteAbelianGroup, Subset};
use bohr_roth::increment::{rank_growth_audit, run_weak_iteration, verify_increment, IterationLog};
use bohr_roth::lattice::{
    directly_similar, divergence_diagnostic, embed_and_lift_check, embedding_constant,
    find_similar_triangles, triangle_to_matrices, ComplexLattice, IntegerMatrixTriple,
    LatticePointSet, Norm, RingElement,
};
use bohr_roth::search::{is_maximal_solution_free, max_solution_free, DEFAULT_NODE_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{RunConfig, DEFAULT_DENSITY, DEFAULT_RATIO_CONSTANT, DEFAULT_TRUNCATION};
use crate::input::{parse_bohr_file, parse_set_file, parse_triangle, Target};
use crate::report::{Outcome, ReportCheck};
use crate::{CliError, Command};

const DEFAULT_TRIANGLE: &str = "0,0;1,0;0,1";

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Count => count(cfg),
        Command::Maxfree => maxfree(cfg),
        Command::BohrInfo => bohr_info(cfg),
        Command::RegularDilate => regular_dilate(cfg),
        Command::Dichotomy => dichotomy(cfg),
        Command::Iterate => iterate(cfg, false),
        Command::RankAudit => iterate(cfg, true),
        Command::Embed { .. } => embed(cfg),
        Command::Triangles { .. } => triangles(cfg),
        Command::Diverge { .. } => diverge(cfg),
    }
}

fn group(cfg: &RunConfig) -> Result<FiniteAbelianGroup, CliError> {
    match (&cfg.group, cfg.matrix_n, cfg.dim) {
        (Some(f), None, _) => Ok(FiniteAbelianGroup::new(f.clone())?),
        (None, Some(n), Some(d)) => Ok(FiniteAbelianGroup::power(n, d)?),
        (None, Some(_), None) => Err(CliError::Usage("--matrix-n needs --dim".into())),
        (Some(_), Some(_), _) => Err(CliError::Usage("give either --group or --matrix-n".into())),
        (None, None, _) => Err(CliError::Usage("a group is required (--group or --matrix-n --dim)".into())),
    }
}

fn system(cfg: &RunConfig, g: &FiniteAbelianGroup) -> Result<EquationSystem, CliError> {
    if let Some(ms) = &cfg.matrices {
        let t = ms
            .iter()
            .map(|m| Endomorphism::matrix(g, m))
            .collect::<Result<Vec<_>, _>>()?;
        let [a, b, c]: [Endomorphism; 3] = t.try_into().expect("three matrices");
        return Ok(EquationSystem::new(g, [a, b, c])?);
    }
    match cfg.coeffs {
        Some(s) => Ok(EquationSystem::from_scalars(g, s)?),
        None => Err(CliError::Usage("coefficients are required (--coeffs or matrices in config)".into())),
    }
}

fn rng(cfg: &RunConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0))
}

/// Each element independently with probability `density`, never empty.
fn random_subset(g: &FiniteAbelianGroup, density: f64, rng: &mut ChaCha8Rng) -> Subset {
    let mut members: Vec<usize> = g.elements().filter(|_| rng.gen_bool(density)).collect();
    if members.is_empty() {
        members.push(rng.gen_range(0..g.order()));
    }
    Subset::from_indices(g, members)
}

fn density(cfg: &RunConfig) -> Result<f64, CliError> {
    let d = cfg.density.unwrap_or(DEFAULT_DENSITY);
    if !(d > 0.0 && d <= 1.0) {
        return Err(CliError::Usage(format!("density {d} outside (0, 1]")));
    }
    Ok(d)
}

/// One or three sets from files, or random ones from the seed.
fn subsets(
    cfg: &RunConfig,
    g: &FiniteAbelianGroup,
    arity: usize,
    notices: &mut Vec<String>,
) -> Result<Vec<Subset>, CliError> {
    let sets = match cfg.sets.len() {
        0 => {
            let mut r = rng(cfg);
            let d = density(cfg)?;
            notices.push(format!(
                "no set file given; drew random sets of density {d} with seed {}",
                cfg.seed.unwrap_or(0)
            ));
            (0..arity).map(|_| random_subset(g, d, &mut r)).collect()
        }
        1 => {
            let f = parse_set_file(&cfg.sets[0], Target::Group(g))?;
            notices.extend(f.notices.clone());
            vec![f.subset(); arity]
        }
        n if n == arity => cfg
            .sets
            .iter()
            .map(|p| {
                let f = parse_set_file(p, Target::Group(g))?;
                notices.extend(f.notices.clone());
                Ok(f.subset())
            })
            .collect::<Result<_, CliError>>()?,
        n => {
            return Err(CliError::Usage(format!("expected 1 or {arity} set files, got {n}")));
        }
    };
    Ok(sets)
}

fn bohr_or_full(
    path: &Option<std::path::PathBuf>,
    g: &FiniteAbelianGroup,
    notices: &mut Vec<String>,
    what: &str,
) -> Result<BohrSet, CliError> {
    match path {
        Some(p) => parse_bohr_file(p, g),
        None => {
            notices.push(format!("no {what} file given; using the whole group"));
            Ok(BohrSet::full(g))
        }
    }
}

fn system_json(sys: &EquationSystem) -> Value {
    json!(sys
        .coefficients()
        .iter()
        .map(|t| t.matrix_rows())
        .collect::<Vec<_>>())
}

fn count(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = group(cfg)?;
    let sys = system(cfg, &g)?;
    let mut notices = Vec::new();
    let sets = subsets(cfg, &g, 3, &mut notices)?;
    let c = enumerate_solutions(&sets[0], &sets[1], &sets[2], &sys)?;
    let td = t_functional(&sets[0], &sets[1], &sets[2], &sys, Method::Direct)?;
    let tf = t_functional(&sets[0], &sets[1], &sets[2], &sys, Method::Fourier)?;
    let n2 = (g.order() as f64).powi(2);
    let checks = vec![
        ReportCheck::at_most("|T_direct - T_fourier|", (td - tf).abs(), cfg.tolerance()),
        ReportCheck::equal("round(|G|^2 T_fourier) == total", (n2 * tf).round(), c.total as f64),
        ReportCheck::equal("|G|^2 T_direct == total", (n2 * td).round(), c.total as f64),
    ];
    Ok(Outcome {
        results: json!({
            "order": g.order(),
            "count": c,
            "T": td,
            "t_direct": td,
            "t_fourier": tf,
        }),
        checks,
        notices,
        inputs: json!({ "factors": g.factors(), "system": system_json(&sys), "sets": sets }),
    })
}

fn maxfree(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = group(cfg)?;
    let sys = system(cfg, &g)?;
    let budget = cfg.node_budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let r = max_solution_free(&sys, budget)?;
    let mut notices = Vec::new();
    let recount = enumerate_solutions(&r.witness, &r.witness, &r.witness, &sys)?;
    let mut checks = vec![ReportCheck::equal(
        "nontrivial solutions in witness",
        recount.nontrivial as f64,
        0.0,
    )];
    if r.exact {
        checks.push(ReportCheck::holds(
            "optimal witness is maximal",
            is_maximal_solution_free(&r.witness, &sys)?,
        ));
    } else {
        notices.push(format!(
            "node budget {budget} exhausted; size {} is a lower bound",
            r.size
        ));
    }
    Ok(Outcome {
        results: json!(r),
        checks,
        notices,
        inputs: json!({ "factors": g.factors(), "system": system_json(&sys), "node_budget": budget }),
    })
}

fn bohr_info(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = group(cfg)?;
    let mut notices = Vec::new();
    let b = bohr_or_full(&cfg.bohr, &g, &mut notices, "Bohr set")?;
    let rho = cfg.rho.unwrap_or(0.5);
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(CliError::Usage(format!("rho {rho} outside (0, 1]")));
    }
    let dilate = b.dilate(rho)?;
    let bound = (rho / 4.0).powi(b.rank() as i32) * b.len() as f64;
    let checks = vec![ReportCheck::at_least(
        "|B_rho| >= (rho/4)^d |B|",
        dilate.len() as f64,
        bound,
    )];
    Ok(Outcome {
        results: json!({
            "rank": b.rank(),
            "size": b.len(),
            "density": b.density(),
            "rho": rho,
            "dilate_size": dilate.len(),
            "regularity": b.regularity(),
            "elements": b.elements(),
        }),
        checks,
        notices,
        inputs: json!({ "factors": g.factors(), "bohr": b.to_spec(false) }),
    })
}

fn regular_dilate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = group(cfg)?;
    let mut notices = Vec::new();
    let b = bohr_or_full(&cfg.bohr, &g, &mut notices, "Bohr set")?;
    let (rho, dilate) = b.regularize()?;
    let checks = vec![
        ReportCheck::at_least("rho >= 1/2", rho, 0.5),
        ReportCheck::at_most("rho <= 1", rho, 1.0),
        ReportCheck::holds("B_rho is regular", dilate.is_regular()),
    ];
    Ok(Outcome {
        results: json!({
            "rho": rho,
            "size": dilate.len(),
            "dilate": dilate.to_spec(false),
            "regularity": dilate.regularity(),
        }),
        checks,
        notices,
        inputs: json!({ "factors": g.factors(), "bohr": b.to_spec(false) }),
    })
}

fn dichotomy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let g = group(cfg)?;
    let sys = system(cfg, &g)?;
    let mut notices = Vec::new();
    let b = bohr_or_full(&cfg.bohr, &g, &mut notices, "Bohr set")?;
    let b_prime = match &cfg.bohr_prime {
        Some(p) => parse_bohr_file(p, &g)?,
        None => b.clone(),
    };
    let sets = subsets(cfg, &g, 3, &mut notices)?;
    let t2_inv = sys
        .t(2)
        .inverse()
        .ok_or_else(|| CliError::Usage("T2 is not invertible".into()))?;
    let b2 = b.apply_automorphism(&t2_inv)?;
    let rel = [
        sets[0].intersection(b.elements())?.len() as f64 / b.len().max(1) as f64,
        sets[1].intersection(b2.elements())?.len() as f64 / b2.len().max(1) as f64,
        sets[2].intersection(b_prime.elements())?.len() as f64 / b_prime.len().max(1) as f64,
    ];
    let alpha = match cfg.alpha {
        Some(a) => a,
        None => rel.iter().copied().fold(1.0, f64::min),
    };
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CliError::Usage(format!("alpha {alpha} outside (0, 1]")));
    }
    let r = progressions_dichotomy(&sets[0], &sets[1], &sets[2], &b, &b_prime, &sys, alpha)?;
    if !r.subsets_ok {
        notices.push("some A_i is not inside its Bohr set".into());
    }
    let mut checks = Vec::new();
    if r.contract_applies {
        checks.push(ReportCheck::from(&r.mass_check));
        checks.push(ReportCheck::holds("spectral branch holds", r.contract_holds));
    } else {
        notices.push("E is small or the many-solutions branch holds; no mass bound asserted".into());
    }
    Ok(Outcome {
        results: json!(r),
        checks,
        notices,
        inputs: json!({
            "factors": g.factors(),
            "system": system_json(&sys),
            "sets": sets,
            "bohr": b.to_spec(false),
            "bohr_prime": b_prime.to_spec(false),
            "alpha": alpha,
        }),
    })
}

fn certificate_checks(log: &IterationLog) -> Result<Vec<ReportCheck>, CliError> {
    let mut checks = Vec::new();
    for (k, step) in log.steps.iter().enumerate() {
        let Some(cert) = &step.certificate else { continue };
        let n = step.n;
        let v = verify_increment(&step.set, &step.bohr, &cert.b_prime, cert)?;
        checks.push(ReportCheck::holds(&format!("step {n}: certificate verifies"), v.valid));
        checks.push(ReportCheck::holds(
            &format!("step {n}: size bound implies cardinality bound"),
            v.implication_holds(),
        ));
        let next = log.steps.get(k + 1).map_or(cert.density, |s| s.alpha);
        checks.push(ReportCheck::at_least(
            &format!("step {n}: alpha_(n+1) >= (1 + delta/C) alpha_n"),
            next,
            (1.0 + cert.delta / cert.constant) * step.alpha * (1.0 - 1e-12),
        ));
    }
    Ok(checks)
}

fn iterate(cfg: &RunConfig, audit: bool) -> Result<Outcome, CliError> {
    let g = group(cfg)?;
    let mut sys = system(cfg, &g)?;
    let mut notices = Vec::new();
    let mut a = subsets(cfg, &g, 1, &mut notices)?.remove(0);
    let mut b = bohr_or_full(&cfg.bohr, &g, &mut notices, "Bohr set")?;
    if !sys.is_canonical() {
        let c = sys.canonicalize();
        a = c.map_set(&a);
        b = b.apply_automorphism(&c.set_map)?;
        sys = c.system;
        notices.push("system rewritten with T1 = Id; A and B replaced by their images under T1".into());
    }
    if !a.is_subset_of(b.elements()) {
        notices.push("A is not inside B; using A ∩ B".into());
        a = a.intersection(b.elements())?;
    }
    if !b.is_regular() {
        let (rho, reg) = b.regularize()?;
        notices.push(format!("B is not regular; using the regular dilate with rho = {rho}"));
        b = reg;
        a = a.intersection(b.elements())?;
    }
    if a.is_empty() {
        return Err(CliError::Usage("A ∩ B is empty".into()));
    }
    let log = run_weak_iteration(&a, &b, &sys, &cfg.increment)?;
    let mut checks = certificate_checks(&log)?;
    if let Some(sol) = log.solution {
        checks.push(ReportCheck::holds(
            "exhibited solution lies in A and solves the equation",
            sol.iter().all(|&v| a.contains(v)) && is_solution(&sys, sol),
        ));
    }
    if let Some(path) = &cfg.trace {
        write_trace(path, &log)?;
    }
    let mut results = json!({ "iteration": log });
    if audit {
        let ratio = cfg.ratio_constant.unwrap_or(DEFAULT_RATIO_CONSTANT);
        let r = rank_growth_audit(&log, &sys, ratio)?;
        for s in &r.steps {
            checks.push(ReportCheck::at_most(
                &format!("step {}: rk(B*) <= 3 rk(B)", s.step),
                s.rank_star as f64,
                3.0 * s.rank as f64,
            ));
            if let Some(ok) = s.contained {
                checks.push(ReportCheck::holds(
                    &format!("step {}: frequencies inside the W_2n image", s.step),
                    ok,
                ));
            }
            if let Some(ratio_v) = s.ratio {
                checks.push(ReportCheck::at_most(
                    &format!("step {}: rank ratio", s.step),
                    ratio_v,
                    ratio,
                ));
            }
            if let Some(bound) = s.fallback_bound {
                checks.push(ReportCheck::at_most(
                    &format!("step {}: rank <= 3^n fallback bound", s.step),
                    s.rank as f64,
                    bound,
                ));
            }
        }
        if let Some(n) = &r.notice {
            notices.push(n.clone());
        }
        results["audit"] = json!(r);
    }
    Ok(Outcome {
        results,
        checks,
        notices,
        inputs: json!({
            "factors": g.factors(),
            "system": system_json(&sys),
            "set": a,
            "bohr": b.to_spec(false),
            "increment": cfg.increment,
        }),
    })
}

fn write_trace(path: &std::path::Path, log: &IterationLog) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for row in log.trace_rows() {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn lattice_points(
    cfg: &RunConfig,
    d: usize,
    box_size: i64,
    notices: &mut Vec<String>,
) -> Result<LatticePointSet, CliError> {
    match cfg.sets.as_slice() {
        [] => {
            let mut r = rng(cfg);
            let dens = density(cfg)?;
            notices.push(format!(
                "no point file given; drew random points of [-{box_size}, {box_size}]^{d} with density {dens}, seed {}",
                cfg.seed.unwrap_or(0)
            ));
            let side = 2 * box_size + 1;
            let total = (side as usize).pow(d as u32);
            let points = (0..total)
                .filter(|_| r.gen_bool(dens))
                .map(|mut k| {
                    (0..d)
                        .map(|_| {
                            let c = (k % side as usize) as i64 - box_size;
                            k /= side as usize;
                            c
                        })
                        .collect()
                })
                .collect();
            Ok(LatticePointSet::new(d, points)?)
        }
        [p] => {
            let f = parse_set_file(p, Target::Lattice(d))?;
            notices.extend(f.notices.clone());
            Ok(f.points())
        }
        more => Err(CliError::Usage(format!("expected one point file, got {}", more.len()))),
    }
}

fn lattice_preset(cfg: &RunConfig) -> Result<ComplexLattice, CliError> {
    Ok(ComplexLattice::preset(cfg.preset.as_deref().unwrap_or("gaussian"))?)
}

fn triangle(cfg: &RunConfig) -> Result<[RingElement; 3], CliError> {
    parse_triangle(cfg.triangle.as_deref().unwrap_or(DEFAULT_TRIANGLE))
}

fn embed(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let triple = if let Some(ms) = &cfg.matrices {
        IntegerMatrixTriple::new(ms.clone())?
    } else if cfg.preset.is_some() || cfg.triangle.is_some() {
        triangle_to_matrices(&lattice_preset(cfg)?, triangle(cfg)?)?
    } else if let Some(s) = cfg.coeffs {
        IntegerMatrixTriple::scalars(cfg.dim.unwrap_or(2), s)?
    } else {
        return Err(CliError::Usage(
            "give --coeffs (with --dim), --preset/--triangle, or matrices in config".into(),
        ));
    };
    let t = cfg.truncate.unwrap_or(DEFAULT_TRUNCATION);
    let mut notices = Vec::new();
    let points = lattice_points(cfg, triple.d, t, &mut notices)?;
    let (_, _, r) = embed_and_lift_check(&points, t, &triple)?;
    if r.dropped > 0 {
        notices.push(format!("{} points outside [-T, T]^d dropped", r.dropped));
    }
    let c = embedding_constant(&triple);
    let checks = vec![
        ReportCheck::at_least("p > 3CT", r.prime as f64, (3 * c * t as i128) as f64 + 1.0),
        ReportCheck::at_least("p > 4CT", r.prime as f64, (4 * c * t as i128) as f64 + 1.0),
        ReportCheck::at_most("p <= 8CT", r.prime as f64, (8 * c * t as i128) as f64),
        ReportCheck::equal(
            "integer solutions == solutions mod p",
            r.integer_solutions as f64,
            r.modular_solutions as f64,
        ),
        ReportCheck::holds("solution sets agree", r.solution_sets_equal),
    ];
    Ok(Outcome {
        results: json!({ "matrices": triple, "lift": r }),
        checks,
        notices,
        inputs: json!({ "matrices": triple.matrices, "truncate": t, "points": points.points }),
    })
}

/// Ordered triples of distinct points similar to `spec`, by the geometric
/// criterion alone.
fn triangle_oracle(
    points: &LatticePointSet,
    lattice: &ComplexLattice,
    spec: [RingElement; 3],
    unordered: bool,
) -> Result<Vec<[usize; 3]>, CliError> {
    let n = points.len();
    let e = |k: usize| (points.points[k][0], points.points[k][1]);
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == j || j == k || i == k {
                    continue;
                }
                if directly_similar(lattice, [e(i), e(j), e(k)], spec)? {
                    let mut key = [i, j, k];
                    key.sort_unstable();
                    if !unordered || seen.insert(key) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn triangles(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = lattice_preset(cfg)?;
    let spec = triangle(cfg)?;
    let unordered = cfg.unordered.unwrap_or(false);
    let mut notices = Vec::new();
    let points = lattice_points(cfg, 2, cfg.truncate.unwrap_or(DEFAULT_TRUNCATION), &mut notices)?;
    let matrices = triangle_to_matrices(&lattice, spec)?;
    let found = find_similar_triangles(&points, &lattice, spec, unordered)?;
    let oracle = triangle_oracle(&points, &lattice, spec, unordered)?;
    let checks = vec![
        ReportCheck::equal("triples found", found.len() as f64, oracle.len() as f64),
        ReportCheck::holds("triples match the geometric oracle", found == oracle),
    ];
    let as_coords: Vec<Vec<&Vec<i64>>> = found
        .iter()
        .map(|t| t.iter().map(|&k| &points.points[k]).collect())
        .collect();
    Ok(Outcome {
        results: json!({
            "lattice": lattice,
            "matrices": matrices,
            "count": found.len(),
            "triples": as_coords,
        }),
        checks,
        notices,
        inputs: json!({ "lattice": lattice, "triangle": spec, "unordered": unordered, "points": points.points }),
    })
}

fn diverge(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = cfg.dim.unwrap_or(2);
    let norm = cfg.norm.unwrap_or(Norm::Max);
    let mut notices = Vec::new();
    let points = lattice_points(cfg, d, cfg.truncate.unwrap_or(DEFAULT_TRUNCATION), &mut notices)?;
    let r = divergence_diagnostic(&points, norm);
    let mut checks = Vec::new();
    if norm == Norm::Max {
        let last = r.rows.last().map_or(0.0, |row| row.shell_sum);
        checks.push(ReportCheck::at_most(
            "|partial sum - shell sum|",
            (r.total - last).abs(),
            cfg.tolerance() * r.total.max(1.0),
        ));
    }
    Ok(Outcome {
        results: json!(r),
        checks,
        notices,
        inputs: json!({ "dim": d, "norm": norm, "points": points.points }),
    })
}
