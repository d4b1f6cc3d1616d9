use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use relhem::classify::{self, Budget, Checkpoint};
use relhem::galois::Field;
use relhem::groups;
use relhem::hemisystem::{self, family_by_name, format_sigma, parse_sigma, Construction, Hemisystem, HemisystemJson, Provenance};
use relhem::permgroup::Group;
use relhem::polar::{Geometry, GeometryCache};
use relhem::Error;

#[derive(Parser)]
#[command(name = "relhem", version, about = "Relative hemisystems of H(3,q^2), q even")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for geometry caches and checkpoints.
    #[arg(long, global = true, default_value = ".relhem-cache")]
    cache_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    OrbitReps,
    Raw,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load) the geometry and print its counts.
    Geometry {
        #[arg(long)]
        q: usize,
    },
    /// Build a family's groups, check the conditions and emit verified hemisystems.
    Family {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        name: String,
        /// Selection as a 0/1 string; defaults to all zeros and all ones.
        #[arg(long)]
        sigma: Option<String>,
        /// Emit every selection.
        #[arg(long)]
        all: bool,
        /// Output directory for the hemisystem files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a line-index file against the definition.
    Verify {
        #[arg(long)]
        q: usize,
        file: PathBuf,
    },
    /// Enumerate all relative hemisystems.
    Classify {
        #[arg(long)]
        q: usize,
        #[arg(long, value_enum, default_value_t = Mode::OrbitReps)]
        mode: Mode,
        #[arg(long)]
        budget_nodes: Option<u64>,
        #[arg(long)]
        budget_seconds: Option<f64>,
        /// Bound on explicit orbit enumeration of hemisystems.
        #[arg(long, default_value_t = 1 << 20)]
        orbit_bound: usize,
        /// JSONL output of the solutions (raw) or representatives (orbit-reps).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hemisystems that are unions of orbits of a group.
    EnumerateInvariant {
        #[arg(long)]
        q: usize,
        /// "trivial", "e", a family name (its G) or "<family>:gbar"; "cossidente1:j" for J.
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 64)]
        max_orbits: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the LP model.
    ExportIlp {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a solver solution file ("name value" lines) and verify it.
    ImportIlp {
        #[arg(long)]
        q: usize,
        file: PathBuf,
    },
    /// Stabiliser of a hemisystem in E.
    Stabilizer {
        #[arg(long)]
        q: usize,
        file: PathBuf,
        #[arg(long, default_value_t = 1 << 22)]
        bound: usize,
    },
}

/// Failures with their own exit codes.
#[derive(Debug)]
enum Exit {
    Verification(String),
    Budget(String),
    Usage(String),
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exit::Verification(s) | Exit::Budget(s) | Exit::Usage(s) => f.write_str(s),
        }
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(4);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<Exit>() {
                Some(Exit::Verification(_)) => 2,
                Some(Exit::Budget(_)) => 3,
                Some(Exit::Usage(_)) => 4,
                None => match e.downcast_ref::<Error>() {
                    Some(Error::UnsupportedQ(_) | Error::Parameter(_)) => 4,
                    Some(Error::Verification(_)) => 2,
                    Some(Error::Budget { .. }) => 3,
                    _ => 1,
                },
            };
            ExitCode::from(code)
        }
    }
}

fn k_of(q: usize) -> anyhow::Result<u32> {
    if q < 2 || !q.is_power_of_two() {
        return Err(Exit::Usage(format!("q must be a power of two, got {q}")).into());
    }
    Ok(q.trailing_zeros())
}

fn load_geometry(cli: &Cli, q: usize) -> anyhow::Result<(Geometry, bool)> {
    let k = k_of(q)?;
    let path = cli.cache_dir.join(format!("geometry-q{q}.json"));
    if path.exists() {
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let cache: GeometryCache = serde_json::from_str(&text)?;
        return Ok((Geometry::from_cache(&cache)?, true));
    }
    let geom = Geometry::build(Arc::new(Field::new(k)?))?;
    fs::create_dir_all(&cli.cache_dir)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec(&geom.to_cache())?)?;
    fs::rename(&tmp, &path)?;
    Ok((geom, false))
}

fn emit(cli: &Cli, value: &Value, text: impl FnOnce() -> String) {
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).unwrap()),
        Format::Text => print!("{}", text()),
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Geometry { q } => cmd_geometry(cli, *q),
        Command::Family { q, name, sigma, all, out } => cmd_family(cli, *q, name, sigma.as_deref(), *all, out.as_deref()),
        Command::Verify { q, file } => cmd_verify(cli, *q, file),
        Command::Classify { q, mode, budget_nodes, budget_seconds, orbit_bound, out } => {
            let budget = Budget { nodes: *budget_nodes, seconds: *budget_seconds };
            if budget.nodes == Some(0) || budget.seconds.is_some_and(|s| s <= 0.0) {
                return Err(Exit::Usage("budgets must be positive".into()).into());
            }
            cmd_classify(cli, *q, *mode, &budget, *orbit_bound, out.as_deref())
        }
        Command::EnumerateInvariant { q, name, max_orbits, out } => cmd_invariant(cli, *q, name, *max_orbits, out.as_deref()),
        Command::ExportIlp { q, out } => cmd_export(cli, *q, out),
        Command::ImportIlp { q, file } => {
            let (geom, _) = load_geometry(cli, *q)?;
            let lines = classify::import_solution(&geom, BufReader::new(fs::File::open(file)?))?;
            report_verify(cli, &geom, &lines)
        }
        Command::Stabilizer { q, file, bound } => cmd_stabilizer(cli, *q, file, *bound),
    }
}

fn cmd_geometry(cli: &Cli, q: usize) -> anyhow::Result<()> {
    let (geom, cached) = load_geometry(cli, q)?;
    let rows = [
        ("hermitian points", geom.herm_point_count()),
        ("hermitian lines", geom.herm_line_count()),
        ("symplectic points", geom.symplectic_points().len()),
        ("symplectic lines", geom.symplectic_lines().len()),
        ("external points", geom.ext_point_count()),
        ("external lines", geom.ext_line_count()),
    ];
    let v = json!({
        "q": q,
        "digest": geom.digest(),
        "counts": rows.iter().map(|(k, n)| (k.replace(' ', "_"), json!(n))).collect::<serde_json::Map<_, _>>(),
    });
    if cached {
        eprintln!("loaded geometry from cache");
    }
    emit(cli, &v, || {
        let mut s = format!("H(3,{q}^2)  digest {}\n", geom.digest());
        for (k, n) in rows {
            s += &format!("{k:>18}: {n}\n");
        }
        s
    });
    Ok(())
}

fn cmd_family(cli: &Cli, q: usize, name: &str, sigma: Option<&str>, all: bool, out: Option<&Path>) -> anyhow::Result<()> {
    let fam = family_by_name(name).map_err(|e| Exit::Usage(e.to_string()))?;
    fam.check_q(q).map_err(|e| Exit::Usage(e.to_string()))?;
    let (geom, _) = load_geometry(cli, q)?;
    let c = Construction::new(&geom, fam)?;
    let n = c.n();
    let selections: Vec<Vec<bool>> = match (sigma, all) {
        (Some(s), _) => vec![parse_sigma(s).map_err(|e| Exit::Usage(e.to_string()))?],
        (None, true) => {
            if n > 20 {
                return Err(Exit::Usage(format!("2^{n} selections is too many for --all")).into());
            }
            (0u64..1 << n).map(|b| (0..n).map(|i| b >> i & 1 == 1).collect()).collect()
        }
        (None, false) => vec![vec![false; n], vec![true; n]],
    };
    let mut emitted = Vec::new();
    for s in &selections {
        let h = c.select(&geom, s)?;
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}-q{q}-{}.json", format_sigma(s)));
            fs::write(&path, serde_json::to_vec_pretty(&h.to_json())?)?;
        }
        emitted.push(json!({"sigma": format_sigma(s), "lines": h.lines.count_ones(..), "verified": true}));
    }
    let extra: serde_json::Map<String, Value> = c.groups.extra.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect();
    let v = json!({
        "family": name,
        "q": q,
        "order_g": c.groups.g.order().to_string(),
        "order_gbar": c.groups.gbar.order().to_string(),
        "extra_orders": extra,
        "n": n,
        "theorem": c.theorem,
        "theorem_passed": c.theorem.passed(),
        "corollary_passed": c.corollary.passed(),
        "corollary_points": c.corollary.points.len(),
        "hemisystems": emitted,
    });
    emit(cli, &v, || {
        let mut s = format!("family {name}, q = {q}\n");
        s += &format!("  |G| = {}, |Ḡ| = {}\n", c.groups.g.order(), c.groups.gbar.order());
        for (k, o) in &c.groups.extra {
            s += &format!("  |{k}| = {o}\n");
        }
        let t = &c.theorem;
        s += &format!("  theorem: index two {}, semiregular {}, equal point orbits {}\n", t.index_two, t.semiregular, t.equal_point_orbits);
        s += &format!("  corollary: {} ({} point orbits)\n", c.corollary.passed(), c.corollary.points.len());
        s += &format!("  n = {n}\n");
        for e in &emitted {
            s += &format!("  sigma {}: {} lines, verified: true\n", e["sigma"].as_str().unwrap(), e["lines"]);
        }
        s
    });
    Ok(())
}

/// Accepts a hemisystem file, an object with "line_indices", or a bare index array.
fn read_lines(geom: &Geometry, file: &Path) -> anyhow::Result<Hemisystem> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let v: Value = serde_json::from_str(&text)?;
    if v.get("digest").is_some() && v.get("provenance").is_some() {
        let j: HemisystemJson = serde_json::from_value(v)?;
        return Ok(Hemisystem::from_json(geom, &j)?);
    }
    let arr = v.get("line_indices").unwrap_or(&v);
    let idx: Vec<u32> = serde_json::from_value(arr.clone()).context("expected an array of external line indices")?;
    let lines = hemisystem::line_set(geom, idx)?;
    Ok(Hemisystem::new(geom, lines, Provenance::Import, None))
}

fn report_verify(cli: &Cli, geom: &Geometry, lines: &hemisystem::LineSet) -> anyhow::Result<()> {
    let r = hemisystem::verify(geom, lines);
    emit(cli, &serde_json::to_value(&r)?, || match &r.witness {
        None => format!("true ({} lines)\n", r.size),
        Some(w) => format!("false, witness point {} {:?} on {} member lines ({} lines)\n", w.point, w.coords, w.count, r.size),
    });
    if r.ok {
        Ok(())
    } else {
        Err(Exit::Verification("not a relative hemisystem".into()).into())
    }
}

fn cmd_verify(cli: &Cli, q: usize, file: &Path) -> anyhow::Result<()> {
    let (geom, _) = load_geometry(cli, q)?;
    let h = read_lines(&geom, file)?;
    report_verify(cli, &geom, &h.lines)
}

fn write_jsonl(path: &Path, geom: &Geometry, sets: &[hemisystem::LineSet]) -> anyhow::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for s in sets {
        let h = Hemisystem::new(geom, s.clone(), Provenance::Search, None);
        writeln!(w, "{}", serde_json::to_string(&h.to_json())?)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_classify(cli: &Cli, q: usize, mode: Mode, budget: &Budget, orbit_bound: usize, out: Option<&Path>) -> anyhow::Result<()> {
    let (geom, _) = load_geometry(cli, q)?;
    match mode {
        Mode::Raw => {
            let cp_path = cli.cache_dir.join(format!("classify-raw-q{q}.checkpoint.json"));
            let resume: Option<Checkpoint> = if cp_path.exists() { Some(serde_json::from_str(&fs::read_to_string(&cp_path)?)?) } else { None };
            let res = classify::search(&geom, &[], &[], budget, resume.as_ref())?;
            if !res.complete {
                fs::create_dir_all(&cli.cache_dir)?;
                fs::write(&cp_path, serde_json::to_vec(&res.checkpoint)?)?;
                return Err(Exit::Budget(format!(
                    "budget exhausted after {} nodes; {} of {} subproblems done, checkpoint {}",
                    res.nodes,
                    res.checkpoint.done.len(),
                    res.checkpoint.subproblems,
                    cp_path.display()
                ))
                .into());
            }
            if cp_path.exists() {
                fs::remove_file(&cp_path)?;
            }
            if let Some(p) = out {
                write_jsonl(p, &geom, &res.solutions)?;
            }
            let v = json!({"q": q, "mode": "raw", "count": res.solutions.len(), "nodes": res.nodes});
            emit(cli, &v, || format!("{} hemisystems ({} nodes)\n", res.solutions.len(), res.nodes));
        }
        Mode::OrbitReps => {
            let e = groups::equivalence_group(geom.field_arc())?;
            let c = match classify::classify(&geom, &e, budget, orbit_bound) {
                Err(Error::Budget { nodes }) => return Err(Exit::Budget(format!("budget exhausted after {nodes} nodes")).into()),
                r => r?,
            };
            if let Some(p) = out {
                let reps: Vec<_> = c.classes.iter().map(|k| k.representative.clone()).collect();
                write_jsonl(p, &geom, &reps)?;
            }
            let sizes: Vec<usize> = c.classes.iter().map(|k| k.size).collect();
            let v = json!({"q": q, "mode": "orbit-reps", "count": c.total(), "classes": c.classes.len(), "class_sizes": sizes, "nodes": c.nodes});
            emit(cli, &v, || {
                let classes = if c.classes.len() == 1 { "class" } else { "classes" };
                format!("{} hemisystems, {} equivalence {classes} under E (sizes {:?})\n", c.total(), c.classes.len(), sizes)
            });
        }
    }
    Ok(())
}

fn named_group(geom: &Geometry, name: &str) -> anyhow::Result<Group> {
    match name {
        "trivial" => return Ok(Group::trivial(geom.field_arc().clone())),
        "e" => return Ok(groups::equivalence_group(geom.field_arc())?),
        "cossidente1:j" => return Ok(groups::j_group(geom.field_arc())?),
        _ => {}
    }
    let (fam, bar) = match name.split_once(':') {
        Some((f, "gbar")) => (f, true),
        Some(_) => bail!(Exit::Usage(format!("unknown group {name:?}"))),
        None => (name, false),
    };
    let fam = family_by_name(fam).map_err(|e| Exit::Usage(e.to_string()))?;
    fam.check_q(geom.q()).map_err(|e| Exit::Usage(e.to_string()))?;
    let g = fam.groups(geom)?;
    Ok(if bar { g.gbar } else { g.g })
}

fn cmd_invariant(cli: &Cli, q: usize, name: &str, max_orbits: usize, out: Option<&Path>) -> anyhow::Result<()> {
    let (geom, _) = load_geometry(cli, q)?;
    let s = named_group(&geom, name)?;
    let sols = classify::enumerate_invariant(&geom, &s, max_orbits).map_err(|e| match e {
        Error::Parameter(m) => anyhow::Error::from(Exit::Usage(m)),
        e => e.into(),
    })?;
    if let Some(p) = out {
        write_jsonl(p, &geom, &sols)?;
    }
    let v = json!({"q": q, "group": name, "order": s.order().to_string(), "count": sols.len()});
    emit(cli, &v, || format!("{} hemisystems invariant under {name} (order {})\n", sols.len(), s.order()));
    Ok(())
}

fn cmd_export(cli: &Cli, q: usize, out: &Path) -> anyhow::Result<()> {
    let (geom, _) = load_geometry(cli, q)?;
    let mut w = BufWriter::new(fs::File::create(out)?);
    classify::export_lp(&geom, &mut w)?;
    w.flush()?;
    let v = json!({"q": q, "path": out, "binaries": geom.ext_line_count(), "equalities": geom.ext_point_count()});
    emit(cli, &v, || format!("wrote {}: {} binaries, {} equalities\n", out.display(), geom.ext_line_count(), geom.ext_point_count()));
    Ok(())
}

fn cmd_stabilizer(cli: &Cli, q: usize, file: &Path, bound: usize) -> anyhow::Result<()> {
    let (geom, _) = load_geometry(cli, q)?;
    let h = read_lines(&geom, file)?;
    if !hemisystem::verify(&geom, &h.lines).ok {
        return Err(Exit::Verification("not a relative hemisystem".into()).into());
    }
    let e = groups::equivalence_group(geom.field_arc())?;
    let st = classify::stabilizer_of(&geom, &h.lines, &e, bound)?;
    let v = json!({"q": q, "order": st.order().to_string(), "index_in_e": (e.order() / st.order()).to_string()});
    emit(cli, &v, || format!("stabiliser order {} (orbit of length {} under E)\n", st.order(), e.order() / st.order()));
    Ok(())
}
