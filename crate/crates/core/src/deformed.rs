//! Operators U and V, the deformed connection on each graded piece, and deformed flat coordinates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::localqh::{GWTable, LocalError, SurfaceData, Target};
use crate::mfs::{FlatFrame, MFSData, MfsError};
use crate::report::Report;
use crate::ringcore::{HbarLaurent, Matrix, Rational, RingDecl, RingError, SeriesElem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeformedError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Mfs(#[from] MfsError),
    #[error(transparent)]
    Local(#[from] LocalError),
    #[error("{op} does not preserve I_{k}: {witness}")]
    Closure { op: &'static str, k: i32, witness: Value },
    #[error("no level {0} in the MFS")]
    NoLevel(i32),
    #[error("b_dual vanishes identically")]
    DegenerateDual,
    #[error("invalid candidate: {0}")]
    Candidate(String),
}

type HMatrix = Vec<Vec<HbarLaurent>>;

/// U^{(k)} and V^{(k)} on one graded piece, indexed [target][source].
#[derive(Clone, Debug)]
pub struct UVLevel {
    pub k: i32,
    pub indices: Vec<usize>,
    pub u: Vec<Vec<SeriesElem>>,
    pub v: Matrix,
}

#[derive(Clone, Debug)]
pub struct UVOperators {
    /// U on the whole tangent space, [target][source].
    pub u: Vec<Vec<SeriesElem>>,
    /// V on the whole tangent space, [target][source].
    pub v: Matrix,
    pub levels: Vec<UVLevel>,
}

fn half_dmin2(d: &Rational) -> Rational {
    (Rational::int(2) - d) * Rational::new(1, 2)
}

/// U(x) = E∘x and V(x) = ∇_x E − (2−D)/2 x, with the closure and E-metric checks.
pub fn uv_operators(m: &MFSData) -> Result<(UVOperators, Report), DeformedError> {
    let n = m.dim();
    let frame = m.flat_frame()?;
    let e = frame.euler_components(&m.euler)?;
    let u: Vec<Vec<SeriesElem>> = (0..n)
        .map(|c| {
            (0..n)
                .map(|a| {
                    let mut s = SeriesElem::zero(&m.ring);
                    for (lb, el) in e.iter().enumerate() {
                        let x = m.coeff(a, lb, c);
                        if !x.is_zero() && !el.is_zero() {
                            s += &(el * x);
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    let shift = half_dmin2(&m.d);
    let v = Matrix::from_fn(n, n, |b, a| {
        let x = m.euler.linear.get(b, a).clone();
        if a == b {
            x - &shift
        } else {
            x
        }
    });
    for a in 0..n {
        for c in 0..n {
            let (lk, lc) = (m.level_of(a), m.level_of(c));
            if lc > lk && !u[c][a].is_zero() {
                return Err(DeformedError::Closure {
                    op: "U",
                    k: lk,
                    witness: json!({"source": m.frame[a].label, "target": m.frame[c].label}),
                });
            }
            if lc > lk && !v.get(c, a).is_zero() {
                return Err(DeformedError::Closure {
                    op: "V",
                    k: lk,
                    witness: json!({"source": m.frame[a].label, "target": m.frame[c].label}),
                });
            }
        }
    }
    let mut rep = Report::new();
    let mut levels = Vec::new();
    for l in &m.levels {
        let idx = &l.indices;
        let vk = Matrix::from_fn(idx.len(), idx.len(), |c, a| v.get(idx[c], idx[a]).clone());
        let uk = idx.iter().map(|&c| idx.iter().map(|&a| u[c][a].clone()).collect()).collect();
        // (Vx, y) + (x, Vy) = k (x, y)
        let lhs = vk.transpose().mul(&l.eta)?;
        let rhs = l.eta.mul(&vk)?;
        let kk = Rational::from(l.k as i64);
        let fail = (0..idx.len())
            .flat_map(|i| (0..idx.len()).map(move |j| (i, j)))
            .find(|&(i, j)| lhs.get(i, j) + rhs.get(i, j) != l.eta.get(i, j) * &kk)
            .map(|(i, j)| json!({"row": m.frame[idx[i]].label, "col": m.frame[idx[j]].label}));
        rep.record(format!("v_metric.level{}", l.k), fail);
        levels.push(UVLevel { k: l.k, indices: idx.clone(), u: uk, v: vk });
    }
    Ok((UVOperators { u, v, levels }, rep))
}

/// Connection matrices of the deformed connection on I_k/I_{k−1}, indexed [target][source].
#[derive(Clone, Debug)]
pub struct DeformedConnection {
    pub k: i32,
    pub indices: Vec<usize>,
    /// One matrix per frame direction: ħ C_{ka,lb}^{kc}.
    pub coord: Vec<HMatrix>,
    /// U^{(k)} + (V^{(k)} − k/2)/ħ.
    pub hbar: HMatrix,
}

fn series_h(s: &SeriesElem, half: i32) -> HbarLaurent {
    HbarLaurent::monomial(s, half, 0, None)
}

pub fn deformed_connection(m: &MFSData, uv: &UVOperators, k: i32) -> Result<DeformedConnection, DeformedError> {
    let lvl = uv.levels.iter().find(|l| l.k == k).ok_or(DeformedError::NoLevel(k))?;
    let idx = &lvl.indices;
    let coord = (0..m.dim())
        .map(|lb| {
            idx.iter()
                .map(|&c| idx.iter().map(|&a| series_h(m.coeff(a, lb, c), 2)).collect())
                .collect()
        })
        .collect();
    let half_k = Rational::new(k as i64, 2);
    let hbar = (0..idx.len())
        .map(|c| {
            (0..idx.len())
                .map(|a| {
                    let mut v = lvl.v.get(c, a).clone();
                    if a == c {
                        v -= &half_k;
                    }
                    let vs = SeriesElem::constant(&m.ring, v);
                    series_h(&lvl.u[c][a], 0).add(&series_h(&vs, -2))
                })
                .collect()
        })
        .collect();
    Ok(DeformedConnection { k, indices: idx.clone(), coord, hbar })
}

fn hderive(frame: &FlatFrame, f: &HbarLaurent, a: usize) -> Result<HbarLaurent, RingError> {
    let mut out = HbarLaurent::zero(f.ring(), f.ehbar_var());
    for (i, x) in frame.coords.iter().enumerate() {
        let c = frame.p.get(i, a);
        if !c.is_zero() {
            out = out.add(&f.derive(x)?.scale(c));
        }
    }
    Ok(out)
}

fn hmap(a: &HMatrix, f: impl Fn(&HbarLaurent) -> Result<HbarLaurent, RingError>) -> Result<HMatrix, RingError> {
    a.iter().map(|r| r.iter().map(&f).collect()).collect()
}

fn hmul(a: &HMatrix, b: &HMatrix) -> HMatrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(HbarLaurent::zero(a[i][0].ring(), None), |s, l| s.add(&a[i][l].mul(&b[l][j]))))
                .collect()
        })
        .collect()
}

/// ∂_X M_Y − ∂_Y M_X + [M_X, M_Y]; `dx_my` and `dy_mx` are already differentiated.
fn curvature(dx_my: &HMatrix, dy_mx: &HMatrix, mx: &HMatrix, my: &HMatrix) -> HMatrix {
    let (xy, yx) = (hmul(mx, my), hmul(my, mx));
    let n = mx.len();
    (0..n)
        .map(|i| (0..n).map(|j| dx_my[i][j].sub(&dy_mx[i][j]).add(&xy[i][j]).sub(&yx[i][j])).collect())
        .collect()
}

fn first_nonzero(m: &MFSData, idx: &[usize], f: &HMatrix) -> Option<Value> {
    for (c, row) in f.iter().enumerate() {
        for (a, x) in row.iter().enumerate() {
            if !x.is_zero() {
                return Some(json!({
                    "source": m.frame[idx[a]].label,
                    "target": m.frame[idx[c]].label,
                    "term": x.leading_term(),
                }));
            }
        }
    }
    None
}

/// Every curvature component of the deformed connection on level k, truncated at the ring order.
pub fn curvature_check(m: &MFSData, k: i32) -> Result<Report, DeformedError> {
    let (uv, _) = uv_operators(m)?;
    let conn = deformed_connection(m, &uv, k)?;
    let frame = m.flat_frame()?;
    let n = m.dim();
    let mut rep = Report::new();
    if conn.indices.is_empty() {
        rep.skip(format!("level{k}.empty"));
        return Ok(rep);
    }
    let dcoord: Vec<Vec<HMatrix>> = (0..n)
        .map(|x| conn.coord.iter().map(|my| hmap(my, |f| hderive(&frame, f, x))).collect())
        .collect::<Result<_, _>>()?;
    let mut first = None;
    for x in 0..n {
        for y in x + 1..n {
            let f = curvature(&dcoord[x][y], &dcoord[y][x], &conn.coord[x], &conn.coord[y]);
            if let Some(w) = first_nonzero(m, &conn.indices, &f) {
                first = Some(json!({"x": m.frame[x].label, "y": m.frame[y].label, "entry": w}));
                break;
            }
        }
        if first.is_some() {
            break;
        }
    }
    rep.record(format!("level{k}.coordinate"), first);
    let mut first = None;
    for x in 0..n {
        let dx_mh = hmap(&conn.hbar, |f| hderive(&frame, f, x))?;
        let dh_mx = hmap(&conn.coord[x], HbarLaurent::derive_hbar)?;
        let f = curvature(&dx_mh, &dh_mx, &conn.coord[x], &conn.hbar);
        if let Some(w) = first_nonzero(m, &conn.indices, &f) {
            first = Some(json!({"x": m.frame[x].label, "y": "hbar", "entry": w}));
            break;
        }
    }
    rep.record(format!("level{k}.hbar"), first);
    Ok(rep)
}

/// Curvature on every level.
pub fn curvature_check_all(m: &MFSData) -> Result<Report, DeformedError> {
    let mut rep = Report::new();
    for l in &m.levels {
        rep.extend_prefixed("", curvature_check(m, l.k)?);
    }
    Ok(rep)
}

/// One deformed flat coordinate t̃ of a given level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformedCoord {
    pub name: String,
    pub level: i32,
    pub function: HbarLaurent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateCandidate {
    pub coords: Vec<DeformedCoord>,
}

impl CoordinateCandidate {
    pub fn get(&self, name: &str) -> Option<&HbarLaurent> {
        self.coords.iter().find(|c| c.name == name).map(|c| &c.function)
    }
}

/// Residual of the flat-dual equations and the Ann condition for one coordinate.
fn verify_one(m: &MFSData, frame: &FlatFrame, e: &[SeriesElem], c: &DeformedCoord) -> Result<Option<Value>, DeformedError> {
    let lvl = m.level(c.level).ok_or(DeformedError::NoLevel(c.level))?;
    let f = c.function.reembed(&m.ring)?;
    let ev = f.ehbar_var().map(str::to_string);
    let zero = HbarLaurent::zero(&m.ring, ev.as_deref());
    for a in 0..m.dim() {
        if m.level_of(a) < c.level && !hderive(frame, &f, a)?.is_zero() {
            return Ok(Some(json!({"equation": "ann", "direction": m.frame[a].label})));
        }
    }
    let idx = &lvl.indices;
    let xi: Vec<HbarLaurent> = idx.iter().map(|&a| hderive(frame, &f, a)).collect::<Result<_, _>>()?;
    for (ai, &a) in idx.iter().enumerate() {
        for lb in 0..m.dim() {
            let lhs = hderive(frame, &xi[ai], lb)?;
            let mut rhs = zero.clone();
            for (ci, &c) in idx.iter().enumerate() {
                rhs = rhs.add(&xi[ci].mul_series(m.coeff(lb, a, c)));
            }
            let res = lhs.sub(&rhs.shift_hbar(2));
            if !res.is_zero() {
                return Ok(Some(json!({
                    "equation": "coordinate",
                    "component": m.frame[a].label,
                    "direction": m.frame[lb].label,
                    "residual": res.leading_term(),
                })));
            }
        }
        let lhs = xi[ai].derive_hbar()?;
        let mut u_part = zero.clone();
        let mut v_part = zero.clone();
        for (ci, &c) in idx.iter().enumerate() {
            let mut s = SeriesElem::zero(&m.ring);
            for (lb, el) in e.iter().enumerate() {
                let x = m.coeff(lb, a, c);
                if !x.is_zero() && !el.is_zero() {
                    s += &(el * x);
                }
            }
            u_part = u_part.add(&xi[ci].mul_series(&s));
            v_part = v_part.add(&xi[ci].scale(m.euler.linear.get(c, a)));
        }
        let w = (Rational::int(2) - &m.d + Rational::from(c.level as i64)) * Rational::new(1, 2);
        v_part = v_part.sub(&xi[ai].scale(&w));
        let res = lhs.sub(&u_part).sub(&v_part.shift_hbar(-2));
        if !res.is_zero() {
            return Ok(Some(json!({
                "equation": "hbar",
                "component": m.frame[a].label,
                "residual": res.leading_term(),
            })));
        }
    }
    Ok(None)
}

/// Checks that each candidate differential is a flat section of the dual deformed connection.
pub fn verify_deformed_coords(m: &MFSData, cand: &CoordinateCandidate) -> Result<Report, DeformedError> {
    let frame = m.flat_frame()?;
    let e = frame.euler_components(&m.euler)?;
    let mut rep = Report::new();
    for c in &cand.coords {
        rep.record(format!("coord.{}", c.name), verify_one(m, &frame, &e, c)?);
    }
    Ok(rep)
}

fn toric_ring(r: usize, order: u32) -> (Arc<RingDecl>, Vec<String>) {
    let coords: Vec<String> = (0..r + 2).map(|i| format!("t{i}")).collect();
    let cs: Vec<&str> = coords.iter().map(String::as_str).collect();
    (RingDecl::with_exps(&cs, &cs[1..=r], order), coords)
}

fn linear(ring: &Arc<RingDecl>, terms: &[(String, Rational)]) -> Result<SeriesElem, RingError> {
    let mut s = SeriesElem::zero(ring);
    for (v, c) in terms {
        s += &SeriesElem::poly_var(ring, v)?.scale(c);
    }
    Ok(s)
}

/// Index p with the largest |b_p^∨|, ties broken towards the last.
pub fn dual_pivot(s: &SurfaceData) -> Result<usize, DeformedError> {
    let bd = s.b_dual();
    let p = (0..bd.len()).max_by(|&i, &j| bd[i].abs().cmp(&bd[j].abs()).then(i.cmp(&j))).expect("r > 0");
    if bd[p].is_zero() {
        return Err(DeformedError::DegenerateDual);
    }
    Ok(p)
}

/// Flat coordinates (u^1…u^r) adapted to the filtration, with the pivot p playing the role of u^r.
pub fn toric_u_coords(s: &SurfaceData, ring: &Arc<RingDecl>) -> Result<Vec<SeriesElem>, DeformedError> {
    let r = s.r();
    let p = dual_pivot(s)?;
    let (b, bd, kappa) = (s.b(), s.b_dual(), s.kappa());
    let t = |i: usize| format!("t{}", i + 1);
    let mut out = Vec::with_capacity(r);
    for k in 0..r {
        let terms: Vec<(String, Rational)> = if k == p {
            (0..r).map(|j| (t(j), -(&bd[j] / &kappa))).collect()
        } else {
            let denom = &kappa * &bd[p];
            let diag: Rational = (0..r).filter(|&j| j != k).map(|j| &b[j] * &bd[j]).sum();
            let mut v = vec![(t(k), &diag / &denom)];
            v.extend((0..r).filter(|&j| j != k).map(|j| (t(j), -(&b[k] * &bd[j]) / &denom)));
            v
        };
        out.push(linear(ring, &terms)?);
    }
    Ok(out)
}

/// Deformed flat coordinates of the local toric MFS.
pub fn toric_flat_coords(s: &SurfaceData, t: &GWTable, order: u32) -> Result<CoordinateCandidate, DeformedError> {
    t.check_surface(s)?;
    let r = s.r();
    let (ring, coords) = toric_ring(r, order);
    let p = dual_pivot(s)?;
    let u = toric_u_coords(s, &ring)?;
    let ev = Some("t0");
    let top = SeriesElem::poly_var(&ring, &coords[r + 1])?;
    let corr = &u[p] * &u[p];
    let corr = &corr.scale(&(s.kappa() * Rational::new(1, 2))) - &t.weighted_sum(&ring, |beta| s.degree(beta))?;
    let tr1 = HbarLaurent::monomial(&top, -1, 1, ev).add(&HbarLaurent::monomial(&corr, 1, 1, ev));
    let mut out = vec![DeformedCoord { name: format!("t{}", r + 1), level: 1, function: tr1 }];
    out.push(DeformedCoord { name: format!("u{}", p + 1), level: 1, function: HbarLaurent::monomial(&u[p], 1, 1, ev) });
    for k in (0..r).filter(|&k| k != p) {
        out.push(DeformedCoord { name: format!("u{}", k + 1), level: 2, function: HbarLaurent::monomial(&u[k], 0, 1, ev) });
    }
    let one = SeriesElem::one(&ring);
    out.push(DeformedCoord { name: "t0".into(), level: 4, function: HbarLaurent::monomial(&one, -2, 1, ev) });
    Ok(CoordinateCandidate { coords: out })
}

/// Deformed flat coordinates of the local P³ MFS.
pub fn p3_flat_coords(t: &GWTable, order: u32) -> Result<CoordinateCandidate, DeformedError> {
    if t.target != Target::P3 {
        return Err(LocalError::Table("expected a p3 table".into()).into());
    }
    let ring = RingDecl::with_exps(&["t0", "t1", "t2", "t3"], &["t1"], order);
    let ev = Some("t0");
    let var = |v: &str| SeriesElem::poly_var(&ring, v);
    let (t1, t2, t3) = (var("t1")?, var("t2")?, var("t3")?);
    let one = SeriesElem::one(&ring);
    let int = |x: i64| Rational::int(x);
    let s0 = t.weighted_sum(&ring, |_| Rational::one())?;
    let s1 = t.weighted_sum(&ring, |b| Rational::from(b[0] as i64))?;
    let sinv = t.weighted_sum(&ring, |b| Rational::new(1, b[0] as i64))?;
    let mut double = SeriesElem::zero(&ring);
    for (b, nb) in &t.entries {
        for (g, ng) in &t.entries {
            let (b, g) = (b[0] as i64, g[0] as i64);
            let c = Rational::new(b * g, b + g) * nb * ng;
            if (b + g) as u32 <= order {
                double += &SeriesElem::exp_term(&ring, &[(b + g) as u32], c)?;
            }
        }
    }
    let t1sq = &t1 * &t1;
    let f2_h = &t1sq.scale(&Rational::new(1, 2)) - &s0.scale(&int(4));
    let f3_0 = &(&t1 * &t2) - &(&t2 * &s1).scale(&int(4));
    let bracket = &(&(&t1sq * &t1).scale(&Rational::new(1, 3)) - &(&(&t1 * &s0) - &sinv).scale(&int(8)))
        + &double.scale(&int(16));
    let coords = vec![
        DeformedCoord { name: "t0".into(), level: 5, function: HbarLaurent::monomial(&one, -2, 1, ev) },
        DeformedCoord { name: "t1".into(), level: 1, function: HbarLaurent::monomial(&t1, 2, 1, ev) },
        DeformedCoord {
            name: "t2".into(),
            level: 1,
            function: HbarLaurent::monomial(&t2, 0, 1, ev).add(&HbarLaurent::monomial(&f2_h, 2, 1, ev)),
        },
        DeformedCoord {
            name: "t3".into(),
            level: 1,
            function: HbarLaurent::monomial(&t3, -2, 1, ev)
                .add(&HbarLaurent::monomial(&f3_0, 0, 1, ev))
                .add(&HbarLaurent::monomial(&bracket.scale(&Rational::new(1, 2)), 2, 1, ev)),
        },
    ];
    Ok(CoordinateCandidate { coords })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localqh::{local_product, Geometry};
    use crate::mfs::EulerField;
    use crate::ringcore::q;
    use std::collections::BTreeMap;

    fn table(target: Target, entries: &[(&[u32], Rational)], order: u32) -> GWTable {
        GWTable::new(target, entries.iter().map(|(b, n)| (b.to_vec(), n.clone())).collect(), order).unwrap()
    }

    fn p2_mfs(order: u32) -> (MFSData, GWTable) {
        let t = table(Target::Toric, &[(&[1], Rational::int(3)), (&[2], q(-45, 8)), (&[3], q(244, 9))], 3);
        (local_product(&Geometry::Toric(SurfaceData::p2()), &t, order).unwrap(), t)
    }

    #[test]
    fn v_follows_degree_pattern() {
        let (m, _) = p2_mfs(1);
        let (uv, rep) = uv_operators(&m).unwrap();
        assert!(rep.all_pass());
        // real degrees 0, 2, 4 of γ0, γ1, γ2 give −deg/2 + 2
        for (label, want) in [("1", 2), ("K", 1), ("pt", 0)] {
            let a = m.label_index(label).unwrap();
            assert_eq!(uv.v.get(a, a), &Rational::int(want));
        }
        let p3 = local_product(&Geometry::P3, &GWTable::empty(Target::P3, 1), 1).unwrap();
        let (uv, _) = uv_operators(&p3).unwrap();
        let top = uv.levels.iter().find(|l| l.k == 5).unwrap();
        assert_eq!(top.v.get(0, 0), &q(5, 2));
    }

    #[test]
    fn u_at_origin_is_classical() {
        let m = local_product(&Geometry::Toric(SurfaceData::p2()), &GWTable::empty(Target::Toric, 1), 1).unwrap();
        let (uv, _) = uv_operators(&m).unwrap();
        let zero: BTreeMap<String, Rational> = m.coords.iter().map(|c| (c.clone(), Rational::zero())).collect();
        for row in &uv.u {
            for x in row {
                assert!(x.specialize(&zero).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn flat_on_p2_and_p3() {
        let (m, _) = p2_mfs(3);
        assert!(curvature_check_all(&m).unwrap().all_pass());
        let t = table(Target::P3, &[(&[1], Rational::one()), (&[2], Rational::one())], 3);
        let m = local_product(&Geometry::P3, &t, 3).unwrap();
        let rep = curvature_check_all(&m).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn wrong_euler_is_curved() {
        let (mut m, _) = p2_mfs(1);
        let one = m.label_index("1").unwrap();
        // E⁰ = 2t⁰: on level 4, ∂_1 M_ħ − ∂_ħ M_1 = 2 − 1
        m.euler = EulerField::new(
            Matrix::from_fn(m.dim(), m.dim(), |i, j| {
                if i == one && j == one {
                    Rational::int(2)
                } else {
                    m.euler.linear.get(i, j).clone()
                }
            }),
            m.euler.constant.clone(),
        );
        let rep = curvature_check(&m, 4).unwrap();
        assert_eq!(rep.status("level4.hbar"), Some(crate::report::Status::Fail));
        let w = rep.get("level4.hbar").unwrap().witness.as_ref().unwrap();
        assert_eq!(w["entry"]["term"], json!("hbar^(0/2) e^(0*hbar*t0) * (1)"));
    }

    #[test]
    fn p2_coordinate_change() {
        let (ring, _) = toric_ring(1, 3);
        let u = toric_u_coords(&SurfaceData::p2(), &ring).unwrap();
        let t1 = SeriesElem::poly_var(&ring, "t1").unwrap();
        assert_eq!(u[0], t1.scale(&q(-1, 3)));
        assert_eq!((&u[0] * &u[0]).scale(&q(9, 2)), (&t1 * &t1).scale(&q(1, 2)));
    }

    #[test]
    fn toric_coordinates_are_flat() {
        let (m, t) = p2_mfs(3);
        let cand = toric_flat_coords(&SurfaceData::p2(), &t, 3).unwrap();
        let rep = verify_deformed_coords(&m, &cand).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
        let f0 = table(Target::Toric, &[(&[1, 0], q(-2, 1)), (&[0, 1], q(-2, 1)), (&[1, 1], q(-4, 1))], 2);
        let m = local_product(&Geometry::Toric(SurfaceData::f0()), &f0, 2).unwrap();
        let rep = verify_deformed_coords(&m, &toric_flat_coords(&SurfaceData::f0(), &f0, 2).unwrap()).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn literal_top_coordinate_fails() {
        let (m, _) = p2_mfs(1);
        let one = SeriesElem::one(&m.ring);
        let cand = CoordinateCandidate {
            coords: vec![DeformedCoord { name: "t0".into(), level: 4, function: HbarLaurent::monomial(&one, 0, 1, Some("t0")) }],
        };
        let rep = verify_deformed_coords(&m, &cand).unwrap();
        assert_eq!(rep.get("coord.t0").unwrap().witness.as_ref().unwrap()["equation"], json!("hbar"));
    }

    #[test]
    fn p3_coordinates_are_flat() {
        let t = table(Target::P3, &[(&[1], Rational::one()), (&[2], Rational::one())], 3);
        let m = local_product(&Geometry::P3, &t, 3).unwrap();
        let cand = p3_flat_coords(&t, 3).unwrap();
        let rep = verify_deformed_coords(&m, &cand).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
        let ring = m.ring.clone();
        let t1 = SeriesElem::poly_var(&ring, "t1").unwrap();
        assert_eq!(cand.get("t1").unwrap().reembed(&ring).unwrap(), HbarLaurent::monomial(&t1, 2, 1, Some("t0")));
    }

    #[test]
    fn checks_survive_triangular_frame_change() {
        let t = table(Target::P3, &[(&[1], Rational::one()), (&[2], Rational::one())], 3);
        let m = local_product(&Geometry::P3, &t, 3).unwrap();
        let dir = |l: &str| m.frame[m.label_index(l).unwrap()].dir.clone();
        let add = |x: Vec<Rational>, y: Vec<Rational>, c: i64| -> Vec<Rational> {
            x.iter().zip(&y).map(|(a, b)| a + &(b * &Rational::int(c))).collect()
        };
        let mut frame = m.frame.clone();
        for f in frame.iter_mut() {
            match f.label.as_str() {
                "g1" => f.dir = add(dir("g1"), dir("g2"), 2),
                "1" => f.dir = add(dir("1"), dir("g3"), -3),
                _ => {}
            }
        }
        let moved = crate::mfs::to_frame(&m, frame).unwrap();
        assert!(crate::mfs::mfs_check(&moved).all_pass());
        assert!(curvature_check_all(&moved).unwrap().all_pass());
        let cand = p3_flat_coords(&t, 3).unwrap();
        let rep = verify_deformed_coords(&moved, &cand).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failures());
    }

    #[test]
    fn perturbed_candidates_rejected() {
        let t = table(Target::P3, &[(&[1], Rational::one()), (&[2], Rational::one())], 3);
        let m = local_product(&Geometry::P3, &t, 3).unwrap();
        let mut cand = p3_flat_coords(&t, 3).unwrap();
        // one extra unit of the β=γ=1 double-sum term
        let extra = SeriesElem::exp_term(&m.ring, &[2], Rational::int(4)).unwrap();
        let t3 = &mut cand.coords[3].function;
        *t3 = t3.reembed(&m.ring).unwrap().add(&HbarLaurent::monomial(&extra, 2, 1, Some("t0")));
        assert!(!verify_deformed_coords(&m, &cand).unwrap().all_pass());

        let (m, t) = p2_mfs(2);
        let mut cand = toric_flat_coords(&SurfaceData::p2(), &t, 2).unwrap();
        let q1 = SeriesElem::exp_term(&m.ring, &[1], Rational::int(6)).unwrap();
        let f = &mut cand.coords[0].function;
        *f = f.reembed(&m.ring).unwrap().add(&HbarLaurent::monomial(&q1, 1, 1, Some("t0")));
        assert!(!verify_deformed_coords(&m, &cand).unwrap().all_pass());
    }

    #[test]
    fn candidate_json_roundtrip() {
        let t = table(Target::P3, &[(&[1], q(-20, 1))], 2);
        let cand = p3_flat_coords(&t, 2).unwrap();
        let v = serde_json::to_value(&cand).unwrap();
        let back: CoordinateCandidate = serde_json::from_value(v).unwrap();
        assert_eq!(back, cand);
    }
}
