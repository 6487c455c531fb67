//! File formats.
//!
//! SCGF grid files: magic `SCGF`, `u16` version (1), `u32` domain dimension
//! `d`, `u32` codomain dimension `m`, `d` x `u32` resolutions, then the samples
//! as `f64`, point-major with the `m` components of a point adjacent. All
//! integers and floats are little-endian.
//!
//! Action specs are plain text:
//!
//! ```text
//! [action]
//! n = 2
//! res = 256,256            # grid for bump and zero displacements
//! preset = sl2_sanov       # optional; supplies names and matrices
//! relation = a b a^-1 b^-1 # optional, repeatable
//!
//! [generator a]
//! matrix = 1,2;0,1
//! delta = a.scgf           # relative to the spec file
//! # or: bump = 0: 0.05, 0 1, 0.0; 1: 0.05, 1 0, 0.0
//! ```
//!
//! A bump term is `component: amplitude, frequency vector, phase`; the phase
//! may be omitted.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::examples::{bump_field, BumpSpec, BumpTerm, Preset};
use crate::semiconj::SolveConfig;
use crate::spectral::IntMatrix;
use crate::torusmap::{ActionSpec, GridFunction, TorusMap};
use crate::word::Word;

const MAGIC: &[u8; 4] = b"SCGF";
const VERSION: u16 = 1;

pub fn write_scgf<W: Write>(g: &GridFunction<f64>, mut w: W) -> Result<()> {
    let mut buf = Vec::with_capacity(14 + 4 * g.d() + 8 * g.data().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.d() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.m() as u32).to_le_bytes());
    for &r in g.res() {
        buf.extend_from_slice(&(r as u32).to_le_bytes());
    }
    for v in g.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Format("truncated SCGF data".into()));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

fn take_u32(bytes: &mut &[u8]) -> Result<usize> {
    Ok(u32::from_le_bytes(take(bytes, 4)?.try_into().expect("4 bytes")) as usize)
}

pub fn read_scgf<R: Read>(mut r: R) -> Result<GridFunction<f64>> {
    let mut all = Vec::new();
    r.read_to_end(&mut all)?;
    let mut b = all.as_slice();
    if take(&mut b, 4)? != MAGIC {
        return Err(Error::Format("not an SCGF file".into()));
    }
    let version = u16::from_le_bytes(take(&mut b, 2)?.try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported SCGF version {version}")));
    }
    let d = take_u32(&mut b)?;
    let m = take_u32(&mut b)?;
    if d == 0 || d > 8 || m == 0 {
        return Err(Error::Format(format!("bad SCGF dimensions d = {d}, m = {m}")));
    }
    let res = (0..d).map(|_| take_u32(&mut b)).collect::<Result<Vec<_>>>()?;
    let count = res
        .iter()
        .try_fold(m, |acc, &r| acc.checked_mul(r))
        .ok_or_else(|| Error::Format("SCGF grid too large".into()))?;
    if b.len() != count * 8 {
        return Err(Error::Format(format!("expected {} sample bytes, found {}", count * 8, b.len())));
    }
    let data = b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    GridFunction::new(res, m, data)
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("bad output path {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn save_scgf(path: &Path, g: &GridFunction<f64>) -> Result<()> {
    let mut buf = Vec::new();
    write_scgf(g, &mut buf)?;
    write_atomic(path, &buf)
}

pub fn load_scgf(path: &Path) -> Result<GridFunction<f64>> {
    read_scgf(fs::File::open(path)?)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_list<T: std::str::FromStr>(s: &str, sep: char, line: usize, what: &str) -> Result<Vec<T>> {
    s.split(sep).map(|t| t.trim().parse().map_err(|_| parse_err(line, format!("bad {what} `{}`", t.trim())))).collect()
}

/// Parses the bump syntax `component: amplitude, f1 f2 .., phase; ..`.
pub fn parse_bump(text: &str, n: usize, line: usize) -> Result<BumpSpec> {
    let mut terms = Vec::new();
    for term in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let (comp, rest) =
            term.split_once(':').ok_or_else(|| parse_err(line, format!("bump term `{term}` lacks `component:`")))?;
        let component: usize =
            comp.trim().parse().map_err(|_| parse_err(line, format!("bad component `{}`", comp.trim())))?;
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(parse_err(line, format!("bump term `{term}` needs amplitude, frequencies and optional phase")));
        }
        let amp: f64 = parts[0].parse().map_err(|_| parse_err(line, format!("bad amplitude `{}`", parts[0])))?;
        let freq: Vec<f64> = parts[1]
            .split_whitespace()
            .map(|f| f.parse().map_err(|_| parse_err(line, format!("bad frequency `{f}`"))))
            .collect::<Result<_>>()?;
        let phase: f64 = match parts.get(2) {
            Some(p) => p.parse().map_err(|_| parse_err(line, format!("bad phase `{p}`")))?,
            None => 0.0,
        };
        terms.push(BumpTerm::new(component, amp, &freq, phase).map_err(|e| parse_err(line, e.to_string()))?);
    }
    BumpSpec::new(n, terms).map_err(|e| parse_err(line, e.to_string()))
}

enum Displacement {
    Zero,
    File(PathBuf),
    Bump(String),
}

struct GenSection {
    name: String,
    line: usize,
    matrix: Option<IntMatrix>,
    delta: Option<(Displacement, usize)>,
}

#[derive(Default)]
struct Header {
    n: Option<usize>,
    res: Option<Vec<usize>>,
    preset: Option<(Preset, usize)>,
    relations: Vec<(String, usize)>,
}

/// Parses an action spec. `base_dir` resolves `delta` paths; `res_override`
/// replaces the `res` key for bump and zero displacements.
pub fn parse_action_spec(text: &str, base_dir: &Path, res_override: Option<&[usize]>) -> Result<ActionSpec<f64>> {
    let mut head = Header::default();
    let mut gens: Vec<GenSection> = Vec::new();
    let mut in_action = false;
    let mut seen_action = false;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('[') {
            let h = h.strip_suffix(']').ok_or_else(|| parse_err(ln, "unterminated section header"))?.trim();
            if h == "action" {
                if seen_action {
                    return Err(parse_err(ln, "duplicate [action] section"));
                }
                in_action = true;
                seen_action = true;
            } else if let Some(name) = h.strip_prefix("generator") {
                let name = name.trim();
                if name.is_empty() {
                    return Err(parse_err(ln, "generator section needs a name"));
                }
                if gens.iter().any(|g| g.name == name) {
                    return Err(parse_err(ln, format!("duplicate generator `{name}`")));
                }
                in_action = false;
                gens.push(GenSection { name: name.to_string(), line: ln, matrix: None, delta: None });
            } else {
                return Err(parse_err(ln, format!("unknown section `{h}`")));
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| parse_err(ln, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if in_action {
            match key {
                "n" => head.n = Some(value.parse().map_err(|_| parse_err(ln, format!("bad dimension `{value}`")))?),
                "res" => head.res = Some(parse_list(value, ',', ln, "resolution")?),
                "preset" => head.preset = Some((value.parse().map_err(|e: Error| parse_err(ln, e.to_string()))?, ln)),
                "relation" => head.relations.push((value.to_string(), ln)),
                _ => return Err(parse_err(ln, format!("unknown key `{key}` in [action]"))),
            }
            continue;
        }
        let g = gens.last_mut().ok_or_else(|| parse_err(ln, "key outside of a section"))?;
        let disp = match key {
            "matrix" => {
                g.matrix = Some(value.parse().map_err(|e: Error| parse_err(ln, e.to_string()))?);
                continue;
            }
            "delta" => Displacement::File(base_dir.join(value)),
            "bump" => Displacement::Bump(value.to_string()),
            _ => return Err(parse_err(ln, format!("unknown key `{key}` in [generator {}]", g.name))),
        };
        if g.delta.is_some() {
            return Err(parse_err(ln, format!("generator `{}` has two displacements", g.name)));
        }
        g.delta = Some((disp, ln));
    }
    if !seen_action {
        return Err(parse_err(0, "missing [action] section"));
    }
    build_spec(head, res_override, gens)
}

fn build_spec(head: Header, res_override: Option<&[usize]>, gens: Vec<GenSection>) -> Result<ActionSpec<f64>> {
    let n = head.n.ok_or_else(|| parse_err(0, "[action] must set n"))?;
    if n == 0 {
        return Err(parse_err(0, "n must be positive"));
    }
    let res: Vec<usize> = match (res_override, head.res) {
        (Some(r), _) => r.to_vec(),
        (None, Some(r)) => r,
        (None, None) => SolveConfig::default_res(n),
    };
    if res.len() != n {
        return Err(parse_err(0, format!("res has {} entries for n = {n}", res.len())));
    }
    let mut order: Vec<(String, IntMatrix, Displacement, usize)> = Vec::new();
    let mut relations = head.relations;
    if let Some((p, pl)) = head.preset {
        for (name, m) in p.generators(n).map_err(|e| parse_err(pl, e.to_string()))? {
            order.push((name, m, Displacement::Zero, pl));
        }
        let names: Vec<String> = order.iter().map(|o| o.0.clone()).collect();
        relations.splice(0..0, p.relations(n).iter().map(|w| (w.display(&names).to_string(), pl)));
        for g in gens {
            let slot = order
                .iter_mut()
                .find(|o| o.0 == g.name)
                .ok_or_else(|| parse_err(g.line, format!("preset has no generator `{}`", g.name)))?;
            if let Some(m) = g.matrix {
                if m != slot.1 {
                    return Err(parse_err(g.line, format!("matrix of `{}` differs from the preset", g.name)));
                }
            }
            if let Some((d, ln)) = g.delta {
                slot.2 = d;
                slot.3 = ln;
            }
        }
    } else {
        for g in gens {
            let m = g.matrix.ok_or_else(|| parse_err(g.line, format!("generator `{}` needs a matrix", g.name)))?;
            let (d, ln) = g.delta.unwrap_or((Displacement::Zero, g.line));
            order.push((g.name, m, d, ln));
        }
    }
    if order.is_empty() {
        return Err(parse_err(0, "no generators"));
    }
    let mut names = Vec::with_capacity(order.len());
    let mut maps = Vec::with_capacity(order.len());
    for (name, m, d, ln) in order {
        if m.n() != n {
            return Err(parse_err(ln, format!("matrix of `{name}` is {0}x{0}, expected n = {n}", m.n())));
        }
        let delta = match d {
            Displacement::Zero => GridFunction::zeros(res.clone(), n)?,
            Displacement::Bump(text) => bump_field(&parse_bump(&text, n, ln)?, res.clone())?,
            Displacement::File(p) => load_scgf(&p).map_err(|e| parse_err(ln, format!("{}: {e}", p.display())))?,
        };
        maps.push(TorusMap::new(m, delta).map_err(|e| parse_err(ln, e.to_string()))?);
        names.push(name);
    }
    let mut spec = ActionSpec::new(names, maps)?;
    for (r, ln) in relations {
        spec.relations.push(Word::parse(&r, spec.names()).map_err(|e| parse_err(ln, e.to_string()))?);
    }
    Ok(spec)
}

pub fn read_action_spec(path: &Path, res_override: Option<&[usize]>) -> Result<ActionSpec<f64>> {
    let text = fs::read_to_string(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_action_spec(&text, dir, res_override)
}

/// Writes `<dir>/<stem>.spec` plus one `<stem>_<name>.scgf` per generator
/// whose displacement is nonzero or sampled off the common grid. Returns the
/// spec path.
pub fn write_action_spec(spec: &ActionSpec<f64>, dir: &Path, stem: &str) -> Result<PathBuf> {
    let res = spec.generators()[0].delta().res().to_vec();
    let join = |v: &[usize]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
    let mut text = format!("[action]\nn = {}\nres = {}\n", spec.n(), join(&res));
    for r in &spec.relations {
        text.push_str(&format!("relation = {}\n", spec.show(r)));
    }
    for (name, g) in spec.names().iter().zip(spec.generators()) {
        text.push_str(&format!("\n[generator {name}]\nmatrix = {}\n", g.matrix()));
        let zero = g.delta().data().iter().all(|&v| v == 0.0);
        if !zero || g.delta().res() != res.as_slice() {
            let file = format!("{stem}_{name}.scgf");
            save_scgf(&dir.join(&file), g.delta())?;
            text.push_str(&format!("delta = {file}\n"));
        }
    }
    let path = dir.join(format!("{stem}.spec"));
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
