//! Covariant derivatives on `g`: the Hess connection, certificates, curvature
//! and the induced derivation `D` of the Weyl algebra.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{ce_differential, Alternating, Form, LieAlgebra, RMatrix};
use crate::linalg::Matrix;
use crate::scalar::{Coef, Rational, Scalar};
use crate::weyl::{Caps, WKey, WeylElement};

/// Christoffel symbols `Γ^k_{ij} = e^k(∇_{e_i} e_j)` of a constant covariant
/// derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    lie: Arc<LieAlgebra>,
    gamma: Vec<Rational>,
    /// `δ_CE` on each basis form, indexed by bitmask.
    ce_table: Vec<Vec<(u8, Rational)>>,
}

/// Which property failed, with 1-based indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConnectionDefect {
    Torsion { i: usize, j: usize, k: usize, value: Rational },
    NotSymplectic { i: usize, j: usize, l: usize, value: Rational },
    NotParallel { k: usize, i: usize, j: usize, value: Rational },
}

impl std::fmt::Display for ConnectionDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConnectionDefect::Torsion { i, j, k, value } => {
                write!(f, "torsion component T^{k}_{{{i}{j}}} = {value}")
            }
            ConnectionDefect::NotSymplectic { i, j, l, value } => {
                write!(f, "(∇_{i} ω)(e_{j}, e_{l}) = {value}")
            }
            ConnectionDefect::NotParallel { k, i, j, value } => {
                write!(f, "(∇_{k} s)^{{{i}{j}}} = {value}")
            }
        }
    }
}

impl Connection {
    /// `gamma[i][j][k] = Γ^k_{ij}`, 0-based.
    pub fn new(lie: Arc<LieAlgebra>, gamma: &[Vec<Vec<Rational>>]) -> Result<Self> {
        let n = lie.dim();
        if gamma.len() != n || gamma.iter().any(|g| g.len() != n || g.iter().any(|h| h.len() != n)) {
            return Err(Error::Config(format!("Christoffel table must be {n}×{n}×{n}")));
        }
        let flat: Vec<Rational> = gamma.iter().flatten().flatten().cloned().collect();
        Ok(Self::from_flat(lie, flat))
    }

    fn from_flat(lie: Arc<LieAlgebra>, gamma: Vec<Rational>) -> Self {
        let n = lie.dim();
        let ce_table = (0u32..1 << n)
            .map(|mask| {
                let mut a = Alternating::zero(n, mask.count_ones() as usize);
                a.add_mask(mask, &Rational::one());
                ce_differential(&lie, &Form(a))
                    .components()
                    .iter()
                    .map(|(m, c)| (*m as u8, c.clone()))
                    .collect()
            })
            .collect();
        Connection { lie, gamma, ce_table }
    }

    pub fn flat(lie: Arc<LieAlgebra>) -> Self {
        let n = lie.dim();
        Self::from_flat(lie, vec![Rational::zero(); n * n * n])
    }

    pub fn lie(&self) -> &Arc<LieAlgebra> {
        &self.lie
    }

    pub fn dim(&self) -> usize {
        self.lie.dim()
    }

    pub fn christoffel(&self, i: usize, j: usize, k: usize) -> &Rational {
        let n = self.dim();
        &self.gamma[(i * n + j) * n + k]
    }

    /// Dense table `[i][j][k] = Γ^k_{ij}`.
    pub fn table(&self) -> Vec<Vec<Vec<Rational>>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.christoffel(i, j, k).clone()).collect()).collect())
            .collect()
    }

    pub fn is_flat(&self) -> bool {
        self.gamma.iter().all(Rational::is_zero)
    }

    /// `∇_{e_i} v` for a vector in coordinates.
    pub fn nabla(&self, i: usize, v: &[Rational]) -> Vec<Rational> {
        let n = self.dim();
        let mut out = vec![Rational::zero(); n];
        for (j, vj) in v.iter().enumerate() {
            if vj.is_zero() {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                let g = self.christoffel(i, j, k);
                if !g.is_zero() {
                    *o = o.add(&g.mul(vj));
                }
            }
        }
        out
    }

    pub fn check_torsion_free(&self) -> std::result::Result<(), ConnectionDefect> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self
                        .christoffel(i, j, k)
                        .sub(self.christoffel(j, i, k))
                        .sub(self.lie.structure_constant(i, j, k));
                    if !v.is_zero() {
                        return Err(ConnectionDefect::Torsion { i: i + 1, j: j + 1, k: k + 1, value: v });
                    }
                }
            }
        }
        Ok(())
    }

    /// `(∇_i ω)(e_j, e_l) = -ω(∇_i e_j, e_l) - ω(e_j, ∇_i e_l) = 0`.
    pub fn check_symplectic(&self, omega: &Matrix<Rational>) -> std::result::Result<(), ConnectionDefect> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut v = Rational::zero();
                    for k in 0..n {
                        v = v
                            .sub(&self.christoffel(i, j, k).mul(&omega[k][l]))
                            .sub(&omega[j][k].mul(self.christoffel(i, l, k)));
                    }
                    if !v.is_zero() {
                        return Err(ConnectionDefect::NotSymplectic { i: i + 1, j: j + 1, l: l + 1, value: v });
                    }
                }
            }
        }
        Ok(())
    }

    /// `(∇_k s)^{ij} = Γ^i_{kℓ} s^{ℓj} + Γ^j_{kℓ} s^{iℓ} = 0` for a bivector
    /// given by its matrix.
    pub fn check_covariantly_constant(&self, s: &Matrix<Rational>) -> std::result::Result<(), ConnectionDefect> {
        let n = self.dim();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = Rational::zero();
                    for l in 0..n {
                        v = v
                            .add(&self.christoffel(k, l, i).mul(&s[l][j]))
                            .add(&self.christoffel(k, l, j).mul(&s[i][l]));
                    }
                    if !v.is_zero() {
                        return Err(ConnectionDefect::NotParallel { k: k + 1, i: i + 1, j: j + 1, value: v });
                    }
                }
            }
        }
        Ok(())
    }

    /// `R̃(e_x, e_y) e_u` in coordinates.
    pub fn curvature_endomorphism(&self, x: usize, y: usize, u: usize) -> Vec<Rational> {
        let n = self.dim();
        let mut eu = vec![Rational::zero(); n];
        eu[u] = Rational::one();
        let a = self.nabla(x, &self.nabla(y, &eu));
        let b = self.nabla(y, &self.nabla(x, &eu));
        let mut br = vec![Rational::zero(); n];
        for (k, c) in self.lie.bracket_basis(x, y) {
            br[k] = c.clone();
        }
        let mut c = vec![Rational::zero(); n];
        for (k, bk) in br.iter().enumerate() {
            if bk.is_zero() {
                continue;
            }
            let mut ek = vec![Rational::zero(); n];
            ek[k] = bk.clone();
            for (o, v) in c.iter_mut().zip(self.nabla_vec(&ek, &eu)) {
                *o = o.add(&v);
            }
        }
        (0..n).map(|k| a[k].sub(&b[k]).sub(&c[k])).collect()
    }

    /// `∇_X v` for a general direction `X`.
    fn nabla_vec(&self, x: &[Rational], v: &[Rational]) -> Vec<Rational> {
        let n = self.dim();
        let mut out = vec![Rational::zero(); n];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.nabla(i, v)) {
                *o = o.add(&w.mul(xi));
            }
        }
        out
    }

    /// `R(Z, U, X, Y) = ω(Z, R̃(X, Y) U)` as a dense table `[z][u][x][y]`.
    pub fn curvature_tensor(&self, omega: &Matrix<Rational>) -> Vec<Vec<Vec<Vec<Rational>>>> {
        let n = self.dim();
        let mut out = vec![vec![vec![vec![Rational::zero(); n]; n]; n]; n];
        for x in 0..n {
            for y in 0..n {
                for u in 0..n {
                    let v = self.curvature_endomorphism(x, y, u);
                    for z in 0..n {
                        let mut s = Rational::zero();
                        for (k, vk) in v.iter().enumerate() {
                            s = s.add(&omega[z][k].mul(vk));
                        }
                        out[z][u][x][y] = s;
                    }
                }
            }
        }
        out
    }

    /// The curvature as an element of `Sym²g* ⊗ Λ²g*`:
    /// `R = ¼ R(Z,U,X,Y) x_Z x_U ⊗ e^X ∧ e^Y` summed over all indices.
    pub fn curvature<S: Scalar + Coef<Field = S>>(&self, omega: &Matrix<Rational>, caps: Caps) -> WeylElement<S> {
        let n = self.dim();
        let rt = self.curvature_tensor(omega);
        let quarter = Rational::new(1, 4);
        let mut out = WeylElement::zero(n, caps);
        for z in 0..n {
            for u in 0..n {
                for x in 0..n {
                    for y in 0..n {
                        let c = &rt[z][u][x][y];
                        if c.is_zero() || x == y {
                            continue;
                        }
                        let mut sym = crate::enveloping::UNIT;
                        sym[z] += 1;
                        sym[u] += 1;
                        let (anti, sign) = if x < y {
                            ((1u8 << x) | (1 << y), 1)
                        } else {
                            ((1u8 << x) | (1 << y), -1)
                        };
                        let v = c.mul(&quarter).mul(&Rational::from_int(sign));
                        out.add_term(WKey { t: 0, sym, anti }, &S::from_rational(&v));
                    }
                }
            }
        }
        out
    }

    /// `D(ξ ⊗ f ⊗ α) = ξ ⊗ ∇_{e_i} f ⊗ e^i ∧ α + ξ ⊗ f ⊗ δ_CE α`, with
    /// `∇_{e_i} x_k = -Γ^k_{ij} x_j`.
    pub fn covariant_d<E: Coef>(&self, a: &WeylElement<E>) -> WeylElement<E> {
        let n = self.dim();
        let mut out = WeylElement::zero(a.dim, a.caps);
        let field = |r: &Rational| <E::Field as Scalar>::from_rational(r);
        for (k, c) in a.terms() {
            if !self.is_flat() {
                for i in 0..n {
                    let Some(sign) = crate::lie::wedge_sign(1 << i, k.anti as u32) else { continue };
                    let anti = k.anti | 1 << i;
                    for kk in 0..n {
                        let m = k.sym[kk];
                        if m == 0 {
                            continue;
                        }
                        for j in 0..n {
                            let g = self.christoffel(i, j, kk);
                            if g.is_zero() {
                                continue;
                            }
                            let mut sym = k.sym;
                            sym[kk] -= 1;
                            sym[j] += 1;
                            let w = g.mul(&Rational::from_int(-(m as i64) * sign));
                            out.add_term(WKey { t: k.t, sym, anti }, &c.scale(&field(&w)));
                        }
                    }
                }
            }
            for (mask, v) in &self.ce_table[k.anti as usize] {
                out.add_term(WKey { anti: *mask, ..*k }, &c.scale(&field(v)));
            }
        }
        out
    }
}

/// Torsion-free symplectic connection from the half-commutator connection by
/// the Hess trick, certified before it is returned.
pub fn hess_connection(lie: &Arc<LieAlgebra>, r: &RMatrix) -> Result<Connection> {
    let n = lie.dim();
    if r.dim() != n {
        return Err(Error::Config("r-matrix dimension differs from the Lie algebra".into()));
    }
    let om = &r.omega;
    let half = Rational::new(1, 2);
    let third = Rational::new(1, 3);
    let unit = |i: usize| {
        let mut v = vec![Rational::zero(); n];
        v[i] = Rational::one();
        v
    };
    let omega = |a: &[Rational], b: &[Rational]| {
        let mut s = Rational::zero();
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if !bj.is_zero() {
                    s = s.add(&ai.mul(&om[i][j]).mul(bj));
                }
            }
        }
        s
    };
    let half_bracket = |x: &[Rational], y: &[Rational]| -> Vec<Rational> {
        lie.bracket(x, y).iter().map(|v| v.mul(&half)).collect()
    };
    // (∇̃_X ω)(Y, Z) = -ω(½[X,Y], Z) - ω(Y, ½[X,Z])
    let tilde_nabla_omega = |x: &[Rational], y: &[Rational], z: &[Rational]| {
        omega(&half_bracket(x, y), z).neg().sub(&omega(y, &half_bracket(x, z)))
    };
    let mut gamma = vec![Rational::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (unit(i), unit(j));
            let rhs: Vec<Rational> = (0..n)
                .map(|l| {
                    let z = unit(l);
                    omega(&half_bracket(&x, &y), &z)
                        .add(&third.mul(&tilde_nabla_omega(&x, &y, &z)))
                        .add(&third.mul(&tilde_nabla_omega(&y, &x, &z)))
                })
                .collect();
            // Γ^k_{ij} ω_{kl} = rhs_l, and ω⁻¹ = r.
            for k in 0..n {
                let mut s = Rational::zero();
                for (l, v) in rhs.iter().enumerate() {
                    s = s.add(&v.mul(&r.r_matrix[l][k]));
                }
                gamma[(i * n + j) * n + k] = s;
            }
        }
    }
    let conn = Connection::from_flat(lie.clone(), gamma);
    conn.check_torsion_free().map_err(|d| Error::Certificate(format!("Hess connection: {d}")))?;
    conn.check_symplectic(om).map_err(|d| Error::Certificate(format!("Hess connection: {d}")))?;
    Ok(conn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{catalog, invert_r};
    use crate::weyl::{FiberProduct, Scalars};
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    const CAPS: Caps = Caps::bounded(3, 40);

    fn setup(e: &catalog::CatalogEntry) -> (Connection, RMatrix) {
        let rd = invert_r(&e.r).unwrap();
        (hess_connection(&e.lie, &rd).unwrap(), rd)
    }

    #[test]
    fn hess_examples() {
        let (c, _) = setup(&catalog::abelian2());
        assert!(c.is_flat());
        let (c, _) = setup(&catalog::ax_plus_b());
        // Independent oracle: solve the defining relation directly as a
        // linear system in the unknown Γ.
        let e = catalog::ax_plus_b();
        let rd = invert_r(&e.r).unwrap();
        let n = 2;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let lhs: Rational = (0..n)
                        .map(|k| c.christoffel(i, j, k).mul(&rd.omega[k][l]))
                        .fold(Rational::zero(), |a, b| a.add(&b));
                    let br = |a: usize, b: usize| -> Vec<Rational> {
                        (0..n).map(|k| e.lie.structure_constant(a, b, k).mul(&Rational::new(1, 2))).collect()
                    };
                    let om = |v: &[Rational], w: usize| -> Rational {
                        (0..n).map(|k| v[k].mul(&rd.omega[k][w])).fold(Rational::zero(), |a, b| a.add(&b))
                    };
                    let om2 = |v: usize, w: &[Rational]| -> Rational {
                        (0..n).map(|k| rd.omega[v][k].mul(&w[k])).fold(Rational::zero(), |a, b| a.add(&b))
                    };
                    let tn = |x: usize, y: usize, z: usize| om(&br(x, y), z).neg().sub(&om2(y, &br(x, z)));
                    let rhs = om(&br(i, j), l)
                        .add(&tn(i, j, l).mul(&Rational::new(1, 3)))
                        .add(&tn(j, i, l).mul(&Rational::new(1, 3)));
                    assert_eq!(lhs, rhs);
                }
            }
        }
        assert!(c.check_torsion_free().is_ok());
        // Block structure on aff(1)+aff(1).
        let (c4, _) = setup(&catalog::aff1_squared());
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(c4.christoffel(i, j, k), c.christoffel(i, j, k));
                    assert_eq!(c4.christoffel(i + 2, j + 2, k + 2), c.christoffel(i, j, k));
                    assert!(c4.christoffel(i, j + 2, k).is_zero());
                    assert!(c4.christoffel(i + 2, j, k).is_zero());
                }
            }
        }
    }

    #[test]
    fn covariantly_constant_examples() {
        let (c, _) = setup(&catalog::abelian2());
        assert!(c.check_covariantly_constant(&vec![vec![q(1), q(2)], vec![q(2), q(5)]]).is_ok());
        let (c, _) = setup(&catalog::ax_plus_b());
        assert!(c.check_covariantly_constant(&vec![vec![q(0), q(0)], vec![q(0), q(0)]]).is_ok());
        let s = vec![vec![q(1), q(0)], vec![q(0), q(1)]];
        assert!(matches!(c.check_covariantly_constant(&s), Err(ConnectionDefect::NotParallel { .. })));
        // r itself is parallel.
        let rd = invert_r(&catalog::ax_plus_b().r).unwrap();
        assert!(c.check_covariantly_constant(&rd.r_matrix).is_ok());
    }

    #[test]
    fn curvature_symmetries_and_bianchi() {
        for e in catalog::all() {
            let (c, rd) = setup(&e);
            let n = e.lie.dim();
            let rt = c.curvature_tensor(&rd.omega);
            for z in 0..n {
                for u in 0..n {
                    for x in 0..n {
                        for y in 0..n {
                            assert_eq!(rt[z][u][x][y], rt[u][z][x][y]);
                            assert_eq!(rt[z][u][x][y], rt[z][u][y][x].neg());
                        }
                    }
                }
            }
            let r: WeylElement<Rational> = c.curvature(&rd.omega, CAPS);
            assert!(r.delta().is_zero(), "{}", e.name);
            assert!(c.covariant_d(&r).is_zero(), "{}", e.name);
            assert_eq!(r.is_zero(), e.lie.is_abelian(), "{}", e.name);
        }
    }

    #[test]
    fn d_on_forms_is_ce_differential() {
        let e = catalog::ax_plus_b();
        let (c, _) = setup(&e);
        // D(1 ⊗ e^Y) = 1 ⊗ δ_CE e^Y = -e^X ∧ e^Y
        let a = WeylElement::term(2, CAPS, WKey { t: 0, sym: crate::enveloping::UNIT, anti: 0b10 }, q(1));
        let d = c.covariant_d(&a);
        assert_eq!(d, WeylElement::term(2, CAPS, WKey { t: 0, sym: crate::enveloping::UNIT, anti: 0b11 }, q(-1)));
        let (flat, _) = setup(&catalog::abelian2());
        let b = WeylElement::term(2, CAPS, WKey { t: 1, sym: [1, 2, 0, 0, 0, 0, 0, 0], anti: 0b01 }, q(3));
        assert!(flat.covariant_d(&b).is_zero());
    }

    fn arb_weyl(dim: usize) -> impl Strategy<Value = WeylElement<Rational>> {
        proptest::collection::vec(
            (0u8..2, proptest::collection::vec(0u8..3, dim), 0u8..(1 << dim), -3i64..4),
            0..5,
        )
        .prop_map(move |ts| {
            let mut w = WeylElement::zero(dim, CAPS);
            for (t, s, a, c) in ts {
                let mut sym = crate::enveloping::UNIT;
                sym[..dim].copy_from_slice(&s);
                w.add_term(WKey::new(t as usize, sym, a), &q(c));
            }
            w
        })
    }

    fn operator_battery(e: &catalog::CatalogEntry, a: &WeylElement<Rational>, b: &WeylElement<Rational>) {
        let (c, rd) = setup(e);
        let p = FiberProduct::real(rd.r_matrix.clone()).unwrap();
        let alg = Scalars::<Rational>::new();
        let r: WeylElement<Rational> = c.curvature(&rd.omega, CAPS);
        // δD + Dδ = 0
        let anti = c.covariant_d(&a.delta()).add(&c.covariant_d(a).delta()).unwrap();
        assert!(anti.is_zero());
        // D² = (1/t) ad(R)
        let d2 = c.covariant_d(&c.covariant_d(a));
        let ad = p.ad_over_t(&alg, &r, a).unwrap();
        assert_eq!(d2, ad);
        // Leibniz
        for k in 0..=e.lie.dim() {
            let ak = a.filter(|key| key.anti_degree() == k);
            let lhs = c.covariant_d(&p.mul(&alg, &ak, b).unwrap());
            let sign = if k % 2 == 0 { q(1) } else { q(-1) };
            let rhs = p
                .mul(&alg, &c.covariant_d(&ak), b)
                .unwrap()
                .add(&p.mul(&alg, &ak, &c.covariant_d(b)).unwrap().scale(&sign))
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn operator_identities_ax_plus_b(a in arb_weyl(2), b in arb_weyl(2)) {
            operator_battery(&catalog::ax_plus_b(), &a, &b);
        }

        #[test]
        fn operator_identities_aff1_squared(a in arb_weyl(4), b in arb_weyl(4)) {
            operator_battery(&catalog::aff1_squared(), &a, &b);
        }

        #[test]
        fn torsion_free_connections_give_ce(v in proptest::collection::vec(-3i64..4, 4)) {
            // e^i ∧ ∇_{e_i} α = δ_CE α on one-forms.
            let e = catalog::aff1_squared();
            let (c, _) = setup(&e);
            let n = 4;
            let mut lhs = Form::zero(n, 2);
            for i in 0..n {
                // (∇_i α)_j = -α_k Γ^k_{ij}
                for j in 0..n {
                    let mut s = Rational::zero();
                    for k in 0..n {
                        s = s.sub(&q(v[k]).mul(c.christoffel(i, j, k)));
                    }
                    lhs = lhs.add(&Form::pair(n, i, j, s));
                }
            }
            let mut alpha = Form::zero(n, 1);
            for k in 0..n {
                alpha = alpha.add(&Form::generator(n, k).scale(&q(v[k])));
            }
            prop_assert_eq!(lhs, ce_differential(&e.lie, &alpha));
        }
    }
}
