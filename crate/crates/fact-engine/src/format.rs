//! Textual structure files: JSON with rationals as `p/q` strings, set
//! elements as atom arrays, and surjections as 1-based integer arrays.
//! Emission is canonical — map-ordered and pretty-printed — so equal
//! structures produce byte-equal files, and every emitted file re-parses to
//! an equal in-memory value. Unknown keys are rejected. Construction-time
//! invariants (surjectivity, invertibility, label consistency) are enforced
//! at parse time; law checking is a separate concern.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fiber::{tensor, Elem, Fiber, FiberMap, FiberTheory, Iso};
use crate::matrix::Matrix;
use crate::report::ValidationReport;
use crate::scalar::{parse_rational, render_rational};
use crate::structure::{StrictStructure, WeakStructure};
use crate::surjection::Surjection;
use crate::universal::{Catalog, CatalogMap, UniversalFamily};
use crate::variety::{
    diagonal_embed, in_v, kernel_partition, restrict_config, Config, EtaleMap, Locus, Variety,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ParseError(pub String);

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        ParseError(format!("json error at line {}, column {}: {e}", e.line(), e.column()))
    }
}

fn err(msg: impl Into<String>) -> ParseError {
    ParseError(msg.into())
}

// ---------------------------------------------------------------------------
// wire representations
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum FiberRepr {
    Set { elements: Vec<Vec<String>> },
    Vector { dim: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum IsoRepr {
    Bijection { pairs: Vec<(Vec<String>, Vec<String>)> },
    Matrix { rows: usize, cols: usize, entries: Vec<String> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiberEntry {
    point: Vec<String>,
    fiber: FiberRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsoEntry {
    surjection: Vec<usize>,
    point: Vec<String>,
    iso: IsoRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArityLocusEntry {
    arity: usize,
    points: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurjLocusEntry {
    surjection: Vec<usize>,
    points: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrictFile {
    format_version: u32,
    kind: String,
    theory: String,
    variety: Vec<String>,
    max_arity: usize,
    fibers: Vec<FiberEntry>,
    nu: Vec<IsoEntry>,
    d: Vec<IsoEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeakFile {
    format_version: u32,
    kind: String,
    theory: String,
    variety: Vec<String>,
    max_arity: usize,
    w_loci: Vec<ArityLocusEntry>,
    r_loci: Vec<SurjLocusEntry>,
    f_loci: Vec<SurjLocusEntry>,
    fibers: Vec<FiberEntry>,
    nu: Vec<IsoEntry>,
    d: Vec<IsoEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedVariety {
    name: String,
    points: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapEntry {
    source: String,
    target: String,
    map: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyStructureEntry {
    variety: String,
    fibers: Vec<FiberEntry>,
    nu: Vec<IsoEntry>,
    d: Vec<IsoEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComparisonComponent {
    point: Vec<String>,
    iso: IsoRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComparisonEntry {
    map: usize,
    components: Vec<ComparisonComponent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    format_version: u32,
    kind: String,
    theory: String,
    max_arity: usize,
    varieties: Vec<NamedVariety>,
    maps: Vec<MapEntry>,
    structures: Vec<FamilyStructureEntry>,
    comparisons: Vec<ComparisonEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EtaleFile {
    format_version: u32,
    kind: String,
    source: Vec<String>,
    target: Vec<String>,
    map: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct ViolationJson {
    law: String,
    surjections: Vec<Vec<usize>>,
    point: Option<Vec<String>>,
    detail: String,
}

#[derive(Serialize)]
struct ReportJson {
    violations: Vec<ViolationJson>,
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

fn theory_name(t: FiberTheory) -> String {
    t.to_string()
}

fn parse_theory(s: &str) -> Result<FiberTheory, ParseError> {
    match s {
        "finite-bijection" => Ok(FiberTheory::FiniteBijection),
        "rational-vector" => Ok(FiberTheory::RationalVector),
        other => Err(err(format!("unknown theory {other:?}"))),
    }
}

fn check_version(v: u32) -> Result<(), ParseError> {
    if v != FORMAT_VERSION {
        return Err(err(format!("unsupported format version {v}")));
    }
    Ok(())
}

fn surjection_to_wire(s: &Surjection) -> Vec<usize> {
    s.map().iter().map(|&v| v + 1).collect()
}

fn surjection_from_wire(vals: &[usize]) -> Result<Surjection, ParseError> {
    if vals.iter().any(|&v| v == 0) {
        return Err(err("surjection values are 1-based"));
    }
    let target = vals.iter().copied().max().unwrap_or(0);
    let map = vals.iter().map(|&v| v - 1).collect();
    Surjection::new(target, map).map_err(|e| err(format!("bad surjection: {e}")))
}

fn point_to_wire(variety: &Variety, x: &Config) -> Vec<String> {
    x.iter().map(|&p| variety.label(p).to_string()).collect()
}

fn point_from_wire(variety: &Variety, labels: &[String]) -> Result<Config, ParseError> {
    labels
        .iter()
        .map(|l| variety.id_of(l).map_err(|e| err(e.to_string())))
        .collect()
}

fn fiber_to_wire(f: &Fiber) -> FiberRepr {
    match f {
        Fiber::Set(elems) => FiberRepr::Set { elements: elems.iter().map(|e| e.0.clone()).collect() },
        Fiber::Vect(d) => FiberRepr::Vector { dim: *d },
    }
}

fn fiber_from_wire(repr: &FiberRepr, theory: FiberTheory) -> Result<Fiber, ParseError> {
    let f = match repr {
        FiberRepr::Set { elements } => Fiber::set(elements.iter().map(|a| Elem(a.clone())).collect())
            .map_err(|e| err(format!("bad fiber: {e}")))?,
        FiberRepr::Vector { dim } => Fiber::Vect(*dim),
    };
    if f.theory() != theory {
        return Err(err("fiber does not match the declared theory"));
    }
    Ok(f)
}

fn iso_to_wire(iso: &Iso) -> IsoRepr {
    match iso.as_map() {
        FiberMap::Func { src, dst, map } => IsoRepr::Bijection {
            pairs: src
                .iter()
                .zip(map)
                .map(|(s, &m)| (s.0.clone(), dst[m].0.clone()))
                .collect(),
        },
        FiberMap::Linear(m) => IsoRepr::Matrix {
            rows: m.rows(),
            cols: m.cols(),
            entries: m.entries().map(render_rational).collect(),
        },
    }
}

/// Isomorphisms are parsed in context: the expected domain and codomain
/// fibers fix the element orders a bijection refers to and the shape a
/// matrix must have. Invertibility is enforced here.
fn iso_from_wire(repr: &IsoRepr, domain: &Fiber, codomain: &Fiber) -> Result<Iso, ParseError> {
    let map = match repr {
        IsoRepr::Matrix { rows, cols, entries } => {
            if domain.size() != *cols || codomain.size() != *rows {
                return Err(err(format!(
                    "matrix is {rows}x{cols} but must be {}x{}",
                    codomain.size(),
                    domain.size()
                )));
            }
            let parsed: Result<Vec<_>, _> = entries.iter().map(|e| parse_rational(e)).collect();
            let m = Matrix::from_flat(*rows, *cols, parsed.map_err(err)?)
                .map_err(|e| err(e.to_string()))?;
            FiberMap::Linear(m)
        }
        IsoRepr::Bijection { pairs } => {
            let (Fiber::Set(src), Fiber::Set(dst)) = (domain, codomain) else {
                return Err(err("bijection given for vector-space fibers"));
            };
            if pairs.len() != src.len() {
                return Err(err("bijection pair count does not match the domain"));
            }
            let mut map = Vec::with_capacity(pairs.len());
            for (i, (from, to)) in pairs.iter().enumerate() {
                if src[i].0 != *from {
                    return Err(err(format!(
                        "bijection pairs must follow the domain element order; pair {i} does not"
                    )));
                }
                let target = dst
                    .iter()
                    .position(|e| e.0 == *to)
                    .ok_or_else(|| err(format!("bijection image {to:?} is not in the codomain")))?;
                map.push(target);
            }
            FiberMap::Func { src: src.clone(), dst: dst.clone(), map }
        }
    };
    Iso::new(map).map_err(|e| err(format!("not an isomorphism: {e}")))
}

fn locus_to_wire(variety: &Variety, l: &Locus) -> Vec<Vec<String>> {
    l.iter().map(|x| point_to_wire(variety, x)).collect()
}

fn locus_from_wire(
    variety: &Variety,
    arity: usize,
    points: &[Vec<String>],
) -> Result<Locus, ParseError> {
    let members: Result<Vec<Config>, ParseError> =
        points.iter().map(|p| point_from_wire(variety, p)).collect();
    Locus::new(arity, members?).map_err(|e| err(e.to_string()))
}

// ---------------------------------------------------------------------------
// strict structures
// ---------------------------------------------------------------------------

pub fn strict_to_string(s: &StrictStructure) -> String {
    let variety = &s.variety;
    let file = StrictFile {
        format_version: FORMAT_VERSION,
        kind: "strict".into(),
        theory: theory_name(s.theory),
        variety: variety.labels().to_vec(),
        max_arity: s.max_arity,
        fibers: s
            .fibers
            .iter()
            .map(|(x, f)| FiberEntry { point: point_to_wire(variety, x), fiber: fiber_to_wire(f) })
            .collect(),
        nu: s
            .nu
            .iter()
            .map(|((a, p), i)| IsoEntry {
                surjection: surjection_to_wire(a),
                point: point_to_wire(variety, p),
                iso: iso_to_wire(i),
            })
            .collect(),
        d: s
            .d
            .iter()
            .map(|((a, x), i)| IsoEntry {
                surjection: surjection_to_wire(a),
                point: point_to_wire(variety, x),
                iso: iso_to_wire(i),
            })
            .collect(),
    };
    to_pretty(&file)
}

fn strict_from_file(file: &StrictFile) -> Result<StrictStructure, ParseError> {
    check_version(file.format_version)?;
    let theory = parse_theory(&file.theory)?;
    let variety = Variety::new(file.variety.clone()).map_err(|e| err(e.to_string()))?;

    let mut fibers = BTreeMap::new();
    for entry in &file.fibers {
        let x = point_from_wire(&variety, &entry.point)?;
        let f = fiber_from_wire(&entry.fiber, theory)?;
        if fibers.insert(x, f).is_some() {
            return Err(err(format!("duplicate fiber entry at {:?}", entry.point)));
        }
    }
    let lookup = |x: &Config| -> Result<Fiber, ParseError> {
        fibers.get(x).cloned().ok_or_else(|| err(format!("isomorphism references missing fiber at {x:?}")))
    };

    let mut nu = BTreeMap::new();
    for entry in &file.nu {
        let alpha = surjection_from_wire(&entry.surjection)?;
        let p = point_from_wire(&variety, &entry.point)?;
        if p.len() != alpha.target_arity() {
            return Err(err("nu point arity does not match the surjection target"));
        }
        let embedded = diagonal_embed(&alpha, &p).expect("arity checked");
        let iso = iso_from_wire(&entry.iso, &lookup(&p)?, &lookup(&embedded)?)?;
        if nu.insert((alpha, p), iso).is_some() {
            return Err(err("duplicate nu entry"));
        }
    }
    let mut d = BTreeMap::new();
    for entry in &file.d {
        let alpha = surjection_from_wire(&entry.surjection)?;
        let x = point_from_wire(&variety, &entry.point)?;
        if x.len() != alpha.source_arity() {
            return Err(err("d point arity does not match the surjection source"));
        }
        let parts: Result<Vec<Fiber>, ParseError> =
            alpha.blocks().iter().map(|bl| lookup(&restrict_config(&x, bl))).collect();
        let domain = tensor(theory, &parts?).map_err(|e| err(e.to_string()))?;
        let iso = iso_from_wire(&entry.iso, &domain, &lookup(&x)?)?;
        if d.insert((alpha, x), iso).is_some() {
            return Err(err("duplicate d entry"));
        }
    }

    Ok(StrictStructure { variety, theory, max_arity: file.max_arity, fibers, nu, d })
}

// ---------------------------------------------------------------------------
// weak structures
// ---------------------------------------------------------------------------

pub fn weak_to_string(z: &WeakStructure) -> String {
    let variety = &z.variety;
    let file = WeakFile {
        format_version: FORMAT_VERSION,
        kind: "weak".into(),
        theory: theory_name(z.theory),
        variety: variety.labels().to_vec(),
        max_arity: z.max_arity,
        w_loci: z
            .w
            .iter()
            .map(|(n, l)| ArityLocusEntry { arity: *n, points: locus_to_wire(variety, l) })
            .collect(),
        r_loci: z
            .r
            .iter()
            .map(|(a, l)| SurjLocusEntry {
                surjection: surjection_to_wire(a),
                points: locus_to_wire(variety, l),
            })
            .collect(),
        f_loci: z
            .f
            .iter()
            .map(|(a, l)| SurjLocusEntry {
                surjection: surjection_to_wire(a),
                points: locus_to_wire(variety, l),
            })
            .collect(),
        fibers: z
            .fibers
            .iter()
            .map(|(x, f)| FiberEntry { point: point_to_wire(variety, x), fiber: fiber_to_wire(f) })
            .collect(),
        nu: z
            .nu
            .iter()
            .map(|((a, p), i)| IsoEntry {
                surjection: surjection_to_wire(a),
                point: point_to_wire(variety, p),
                iso: iso_to_wire(i),
            })
            .collect(),
        d: z
            .d
            .iter()
            .map(|((a, x), i)| IsoEntry {
                surjection: surjection_to_wire(a),
                point: point_to_wire(variety, x),
                iso: iso_to_wire(i),
            })
            .collect(),
    };
    to_pretty(&file)
}

fn weak_from_file(file: &WeakFile) -> Result<WeakStructure, ParseError> {
    check_version(file.format_version)?;
    let theory = parse_theory(&file.theory)?;
    let variety = Variety::new(file.variety.clone()).map_err(|e| err(e.to_string()))?;

    let mut w = BTreeMap::new();
    for entry in &file.w_loci {
        let l = locus_from_wire(&variety, entry.arity, &entry.points)?;
        if w.insert(entry.arity, l).is_some() {
            return Err(err(format!("duplicate W locus for arity {}", entry.arity)));
        }
    }
    let mut r = BTreeMap::new();
    for entry in &file.r_loci {
        let a = surjection_from_wire(&entry.surjection)?;
        let l = locus_from_wire(&variety, a.target_arity(), &entry.points)?;
        if r.insert(a, l).is_some() {
            return Err(err("duplicate R locus"));
        }
    }
    let mut f = BTreeMap::new();
    for entry in &file.f_loci {
        let a = surjection_from_wire(&entry.surjection)?;
        if !a.is_canonical() {
            return Err(err("F loci are keyed by canonical surjections"));
        }
        let l = locus_from_wire(&variety, a.source_arity(), &entry.points)?;
        if f.insert(a, l).is_some() {
            return Err(err("duplicate F locus"));
        }
    }

    let mut fibers = BTreeMap::new();
    for entry in &file.fibers {
        let x = point_from_wire(&variety, &entry.point)?;
        let fiber = fiber_from_wire(&entry.fiber, theory)?;
        if fibers.insert(x, fiber).is_some() {
            return Err(err(format!("duplicate fiber entry at {:?}", entry.point)));
        }
    }
    let lookup = |x: &Config| -> Result<Fiber, ParseError> {
        fibers.get(x).cloned().ok_or_else(|| err(format!("isomorphism references missing fiber at {x:?}")))
    };

    let mut nu = BTreeMap::new();
    for entry in &file.nu {
        let alpha = surjection_from_wire(&entry.surjection)?;
        let p = point_from_wire(&variety, &entry.point)?;
        if p.len() != alpha.target_arity() {
            return Err(err("nu point arity does not match the surjection target"));
        }
        let embedded = diagonal_embed(&alpha, &p).expect("arity checked");
        let iso = iso_from_wire(&entry.iso, &lookup(&p)?, &lookup(&embedded)?)?;
        if nu.insert((alpha, p), iso).is_some() {
            return Err(err("duplicate nu entry"));
        }
    }
    let mut d = BTreeMap::new();
    for entry in &file.d {
        let alpha = surjection_from_wire(&entry.surjection)?;
        let x = point_from_wire(&variety, &entry.point)?;
        if x.len() != alpha.source_arity() {
            return Err(err("d point arity does not match the surjection source"));
        }
        let parts: Result<Vec<Fiber>, ParseError> =
            alpha.blocks().iter().map(|bl| lookup(&restrict_config(&x, bl))).collect();
        let domain = tensor(theory, &parts?).map_err(|e| err(e.to_string()))?;
        let iso = iso_from_wire(&entry.iso, &domain, &lookup(&x)?)?;
        if d.insert((alpha, x), iso).is_some() {
            return Err(err("duplicate d entry"));
        }
    }

    Ok(WeakStructure { variety, theory, max_arity: file.max_arity, w, fibers, r, nu, f, d })
}

// ---------------------------------------------------------------------------
// universal families
// ---------------------------------------------------------------------------

pub fn family_to_string(fam: &UniversalFamily) -> String {
    let names: Vec<String> = (0..fam.catalog.varieties.len()).map(|i| format!("X{i}")).collect();
    let file = FamilyFile {
        format_version: FORMAT_VERSION,
        kind: "family".into(),
        theory: theory_name(fam.theory),
        max_arity: fam.max_arity,
        varieties: fam
            .catalog
            .varieties
            .iter()
            .zip(&names)
            .map(|(v, n)| NamedVariety { name: n.clone(), points: v.labels().to_vec() })
            .collect(),
        maps: fam
            .catalog
            .maps
            .iter()
            .map(|m| MapEntry {
                source: names[m.source].clone(),
                target: names[m.target].clone(),
                map: m
                    .phi
                    .source()
                    .labels()
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.clone(), m.phi.target().label(m.phi.apply(i)).to_string()))
                    .collect(),
            })
            .collect(),
        structures: fam
            .structures
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let variety = &s.variety;
                FamilyStructureEntry {
                    variety: names[i].clone(),
                    fibers: s
                        .fibers
                        .iter()
                        .map(|(x, f)| FiberEntry {
                            point: point_to_wire(variety, x),
                            fiber: fiber_to_wire(f),
                        })
                        .collect(),
                    nu: s
                        .nu
                        .iter()
                        .map(|((a, p), iso)| IsoEntry {
                            surjection: surjection_to_wire(a),
                            point: point_to_wire(variety, p),
                            iso: iso_to_wire(iso),
                        })
                        .collect(),
                    d: s
                        .d
                        .iter()
                        .map(|((a, x), iso)| IsoEntry {
                            surjection: surjection_to_wire(a),
                            point: point_to_wire(variety, x),
                            iso: iso_to_wire(iso),
                        })
                        .collect(),
                }
            })
            .collect(),
        comparisons: fam
            .comparisons
            .iter()
            .enumerate()
            .map(|(mi, cmp)| {
                let variety = fam.catalog.varieties[fam.catalog.maps[mi].source].clone();
                ComparisonEntry {
                    map: mi,
                    components: cmp
                        .iter()
                        .map(|(x, iso)| ComparisonComponent {
                            point: point_to_wire(&variety, x),
                            iso: iso_to_wire(iso),
                        })
                        .collect(),
                }
            })
            .collect(),
    };
    to_pretty(&file)
}

/// Fiber of the corrected pullback at a point, computed without running the
/// full reconstruction: the copied fiber on the separation locus, a kernel
/// tensor elsewhere.
fn pulled_fiber(
    phi: &EtaleMap,
    tgt: &StrictStructure,
    x: &Config,
) -> Result<Fiber, ParseError> {
    if in_v(phi, x) {
        tgt.fiber(&phi.apply_tuple(x))
            .cloned()
            .ok_or_else(|| err("pullback comparison references a missing target fiber"))
    } else {
        let kappa = kernel_partition(x);
        let parts: Result<Vec<Fiber>, ParseError> = kappa
            .blocks()
            .iter()
            .map(|bl| pulled_fiber(phi, tgt, &restrict_config(x, bl)))
            .collect();
        tensor(tgt.theory, &parts?).map_err(|e| err(e.to_string()))
    }
}

fn family_from_file(file: &FamilyFile) -> Result<UniversalFamily, ParseError> {
    check_version(file.format_version)?;
    let theory = parse_theory(&file.theory)?;

    let mut varieties = Vec::new();
    let mut names = Vec::new();
    for nv in &file.varieties {
        if names.contains(&nv.name) {
            return Err(err(format!("duplicate variety name {:?}", nv.name)));
        }
        names.push(nv.name.clone());
        varieties.push(Variety::new(nv.points.clone()).map_err(|e| err(e.to_string()))?);
    }
    let index_of = |name: &str| -> Result<usize, ParseError> {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| err(format!("unknown variety name {name:?}")))
    };

    let mut maps = Vec::new();
    for entry in &file.maps {
        let source = index_of(&entry.source)?;
        let target = index_of(&entry.target)?;
        let sv = &varieties[source];
        let tv = &varieties[target];
        let mut assignment = vec![usize::MAX; sv.size()];
        for (from, to) in &entry.map {
            let i = sv.id_of(from).map_err(|e| err(e.to_string()))?;
            assignment[i] = tv.id_of(to).map_err(|e| err(e.to_string()))?;
        }
        if assignment.contains(&usize::MAX) {
            return Err(err("etale map must assign every source point"));
        }
        let phi = EtaleMap::new(sv.clone(), tv.clone(), assignment).map_err(|e| err(e.to_string()))?;
        maps.push(CatalogMap { source, target, phi });
    }

    if file.structures.len() != varieties.len() {
        return Err(err("family must carry exactly one structure per variety"));
    }
    let mut structures: Vec<Option<StrictStructure>> = vec![None; varieties.len()];
    for entry in &file.structures {
        let vi = index_of(&entry.variety)?;
        let pseudo = StrictFile {
            format_version: FORMAT_VERSION,
            kind: "strict".into(),
            theory: file.theory.clone(),
            variety: varieties[vi].labels().to_vec(),
            max_arity: file.max_arity,
            fibers: entry.fibers.iter().map(clone_fiber_entry).collect(),
            nu: entry.nu.iter().map(clone_iso_entry).collect(),
            d: entry.d.iter().map(clone_iso_entry).collect(),
        };
        if structures[vi].replace(strict_from_file(&pseudo)?).is_some() {
            return Err(err(format!("duplicate structure for variety {:?}", entry.variety)));
        }
    }
    let structures: Vec<StrictStructure> = structures
        .into_iter()
        .map(|s| s.ok_or_else(|| err("missing structure for a catalog variety")))
        .collect::<Result<_, _>>()?;

    if file.comparisons.len() != maps.len() {
        return Err(err("family must carry exactly one comparison per map"));
    }
    let mut comparisons: Vec<Option<BTreeMap<Config, Iso>>> = vec![None; maps.len()];
    for entry in &file.comparisons {
        if entry.map >= maps.len() {
            return Err(err(format!("comparison references unknown map {}", entry.map)));
        }
        let m = &maps[entry.map];
        let sv = &varieties[m.source];
        let src = &structures[m.source];
        let tgt = &structures[m.target];
        let mut cmp = BTreeMap::new();
        for comp in &entry.components {
            let x = point_from_wire(sv, &comp.point)?;
            let domain = src
                .fiber(&x)
                .cloned()
                .ok_or_else(|| err("comparison references a missing source fiber"))?;
            let codomain = pulled_fiber(&m.phi, tgt, &x)?;
            let iso = iso_from_wire(&comp.iso, &domain, &codomain)?;
            if cmp.insert(x, iso).is_some() {
                return Err(err("duplicate comparison component"));
            }
        }
        if comparisons[entry.map].replace(cmp).is_some() {
            return Err(err(format!("duplicate comparison for map {}", entry.map)));
        }
    }
    let comparisons: Vec<BTreeMap<Config, Iso>> = comparisons
        .into_iter()
        .map(|c| c.ok_or_else(|| err("missing comparison for a catalog map")))
        .collect::<Result<_, _>>()?;

    Ok(UniversalFamily {
        theory,
        max_arity: file.max_arity,
        catalog: Catalog { varieties, maps },
        structures,
        comparisons,
    })
}

fn clone_fiber_entry(e: &FiberEntry) -> FiberEntry {
    FiberEntry {
        point: e.point.clone(),
        fiber: match &e.fiber {
            FiberRepr::Set { elements } => FiberRepr::Set { elements: elements.clone() },
            FiberRepr::Vector { dim } => FiberRepr::Vector { dim: *dim },
        },
    }
}

fn clone_iso_entry(e: &IsoEntry) -> IsoEntry {
    IsoEntry {
        surjection: e.surjection.clone(),
        point: e.point.clone(),
        iso: match &e.iso {
            IsoRepr::Bijection { pairs } => IsoRepr::Bijection { pairs: pairs.clone() },
            IsoRepr::Matrix { rows, cols, entries } => {
                IsoRepr::Matrix { rows: *rows, cols: *cols, entries: entries.clone() }
            }
        },
    }
}

// ---------------------------------------------------------------------------
// etale maps, reports, dispatch
// ---------------------------------------------------------------------------

pub fn etale_to_string(m: &EtaleMap) -> String {
    let file = EtaleFile {
        format_version: FORMAT_VERSION,
        kind: "etale-map".into(),
        source: m.source().labels().to_vec(),
        target: m.target().labels().to_vec(),
        map: m
            .source()
            .labels()
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), m.target().label(m.apply(i)).to_string()))
            .collect(),
    };
    to_pretty(&file)
}

pub fn etale_from_str(s: &str) -> Result<EtaleMap, ParseError> {
    let file: EtaleFile = serde_json::from_str(s)?;
    check_version(file.format_version)?;
    if file.kind != "etale-map" {
        return Err(err(format!("expected an etale-map file, found kind {:?}", file.kind)));
    }
    let source = Variety::new(file.source).map_err(|e| err(e.to_string()))?;
    let target = Variety::new(file.target).map_err(|e| err(e.to_string()))?;
    let mut assignment = vec![usize::MAX; source.size()];
    for (from, to) in &file.map {
        let i = source.id_of(from).map_err(|e| err(e.to_string()))?;
        assignment[i] = target.id_of(to).map_err(|e| err(e.to_string()))?;
    }
    if assignment.contains(&usize::MAX) {
        return Err(err("etale map must assign every source point"));
    }
    EtaleMap::new(source, target, assignment).map_err(|e| err(e.to_string()))
}

/// Parsed content of a structure file.
pub enum Parsed {
    Strict(StrictStructure),
    Weak(WeakStructure),
    Family(UniversalFamily),
}

pub fn parse_structure(s: &str) -> Result<Parsed, ParseError> {
    let value: serde_json::Value = serde_json::from_str(s)?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| err("missing kind field"))?
        .to_string();
    match kind.as_str() {
        "strict" => {
            let file: StrictFile = serde_json::from_value(value)?;
            Ok(Parsed::Strict(strict_from_file(&file)?))
        }
        "weak" => {
            let file: WeakFile = serde_json::from_value(value)?;
            Ok(Parsed::Weak(weak_from_file(&file)?))
        }
        "family" => {
            let file: FamilyFile = serde_json::from_value(value)?;
            Ok(Parsed::Family(family_from_file(&file)?))
        }
        other => Err(err(format!("unknown kind {other:?}"))),
    }
}

pub fn report_to_json(rep: &ValidationReport, variety: Option<&Variety>) -> String {
    let file = ReportJson {
        violations: rep
            .violations()
            .iter()
            .map(|v| ViolationJson {
                law: v.law.name().to_string(),
                surjections: v.surjections.iter().map(surjection_to_wire).collect(),
                point: v.point.as_ref().map(|p| match variety {
                    Some(var) => point_to_wire(var, p),
                    None => p.iter().map(|c| c.to_string()).collect(),
                }),
                detail: v.detail.clone(),
            })
            .collect(),
    };
    to_pretty(&file)
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
