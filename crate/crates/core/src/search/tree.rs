//! The reduction tree of a polynomial: node `(k, i)` is `f mod (x^(M_k) - zeta^(2^k i))`,
//! the restriction of `f` to `S_i^k`. Children of `(k + 1, i)` are `(k, i)` and
//! `(k, i + 2^(s-2-k))`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::poly::{glue_pair, is_sqrt_poly, level_alpha, level_modulus, Degree, Poly};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SqrtTree {
    pub p: u32,
    pub q: usize,
    /// `levels[k][i]` for `k = 0..s` and `i < 2^(s-1-k)`; the last level holds `f` itself.
    pub levels: Vec<Vec<Poly>>,
}

impl SqrtTree {
    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn node(&self, k: usize, i: usize) -> &Poly {
        &self.levels[k][i]
    }

    pub fn leaves(&self) -> &[Poly] {
        &self.levels[0]
    }

    pub fn root(&self) -> &Poly {
        &self.levels[self.top_level()][0]
    }

    /// Levels `k + 1` (1-based target of the gluing) at which `deg(f_i - f_j) < M_k - 1`
    /// for some pair of siblings, i.e. where the glued degree drops below `2 M_k - 1`.
    pub fn cancellation_levels(&self) -> Vec<usize> {
        let top = self.top_level();
        (0..top)
            .filter(|&k| {
                let half = self.levels[k].len() / 2;
                let m = self.levels[k][0].len();
                (0..half).any(|i| {
                    let d = self.levels[k][i]
                        .sub(&self.levels[k][i + half])
                        .map(|g| g.degree())
                        .unwrap_or(Degree::NegInfinity);
                    d < Degree::Finite(m - 1)
                })
            })
            .map(|k| k + 1)
            .collect()
    }

    /// Rebuilds the root from the leaves with [`glue_pair`].
    pub fn reglue(&self, ctx: &FieldCtx) -> Result<Poly> {
        let mut cur = self.levels[0].clone();
        for k in 0..self.top_level() {
            let half = cur.len() / 2;
            cur = (0..half)
                .map(|i| glue_pair(ctx, &cur[i], &cur[i + half], k, i))
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(cur.swap_remove(0))
    }

    /// Indented text, root first, each node followed by its two children.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(self.top_level(), 0, 0, &mut out);
        out
    }

    fn render_node(&self, k: usize, i: usize, depth: usize, out: &mut String) {
        let f = self.node(k, i);
        let _ = writeln!(
            out,
            "{:indent$}f_{i}^{k} [deg {}] = {f}",
            "",
            f.degree(),
            indent = 2 * depth
        );
        if k > 0 {
            let half = self.levels[k - 1].len() / 2;
            self.render_node(k - 1, i, depth + 1, out);
            self.render_node(k - 1, i + half, depth + 1, out);
        }
    }
}

/// Builds the tree of `f` without checking that it is a square-root polynomial.
///
/// `f` is first folded into the ring of length `r`.
pub fn reduce_tree(ctx: &FieldCtx, f: &Poly) -> Result<SqrtTree> {
    if ctx.s() < 2 {
        return Err(Error::WrongResidue {
            p: ctx.p(),
            residue: ctx.p() % 4,
        });
    }
    if f.p() != ctx.p() {
        return Err(Error::ContextMismatch {
            left_p: ctx.p(),
            left_len: ctx.r_usize(),
            right_p: f.p(),
            right_len: f.len(),
        });
    }
    let f = f.clone().into_ring(ctx.r_usize());
    let top = ctx.s() as usize - 1;
    let levels = (0..=top)
        .map(|k| {
            let m = level_modulus(ctx, k);
            (0..1usize << (top - k))
                .map(|i| f.reduce_modulo(m, level_alpha(ctx, k, i)))
                .collect()
        })
        .collect();
    Ok(SqrtTree {
        p: ctx.p(),
        q: ctx.q_usize(),
        levels,
    })
}

/// The tree of a square-root polynomial; every node is a square-root polynomial on its block.
pub fn decompose_tree(ctx: &FieldCtx, f: &Poly) -> Result<SqrtTree> {
    if f.p() != ctx.p() || !is_sqrt_poly(ctx, &f.clone().into_ring(ctx.r_usize())) {
        return Err(Error::NotASqrtPoly);
    }
    reduce_tree(ctx, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field_ctx;

    const MINIMAL_41: &str = "15x^17+32x^16+4x^15+12x^14+37x^13+25x^12+5x^11+x^10+x^9+x^8+9x^6+29x^5+6x^4+36x^3+7x^2+33x+35";

    #[test]
    fn minimal_degree_17_leaves() {
        let c = make_field_ctx(41).unwrap();
        let f = Poly::parse(41, 20, MINIMAL_41).unwrap();
        let t = decompose_tree(&c, &f).unwrap();
        let leaves: Vec<String> = t.leaves().iter().map(|g| g.to_string()).collect();
        assert_eq!(
            leaves,
            [
                "19x^4 + 33x^3 + 6x^2 + 38x + 28",
                "26x^4 + 31x^3 + 35x^2 + 30x + 14",
                "17x^4 + 31x^3 + 17x^2 + 38x + 3",
                "3x^4 + 8x^3 + 11x^2 + 26x + 13",
            ]
        );
        assert_eq!(t.reglue(&c).unwrap(), f);
        assert_eq!(t.cancellation_levels(), [2]);
        assert!(t.render().starts_with("f_0^2 [deg 17] = 15x^17"));
    }

    #[test]
    fn literal_ts_diagram_reduces_as_printed() {
        let c = make_field_ctx(41).unwrap();
        let f = Poly::parse(41, 20, "2x^18+29x^13+37x^8+35x^3").unwrap();
        assert!(matches!(decompose_tree(&c, &f), Err(Error::NotASqrtPoly)));
        let t = reduce_tree(&c, &f).unwrap();
        let leaves: Vec<String> = t.leaves().iter().map(|g| g.to_string()).collect();
        assert_eq!(leaves, ["21x^3", "19x^3", "25x^3", "34x^3"]);
        assert_eq!(t.node(1, 0).to_string(), "39x^8 + 23x^3");
        assert_eq!(t.reglue(&c).unwrap(), f);
    }

    #[test]
    fn nodes_are_square_roots_on_their_blocks() {
        let c = make_field_ctx(41).unwrap();
        let f = Poly::parse(41, 20, MINIMAL_41).unwrap();
        let t = decompose_tree(&c, &f).unwrap();
        for k in 0..=t.top_level() {
            let m = level_modulus(&c, k);
            let stride = 1usize << (t.top_level() - k);
            for (i, g) in t.levels[k].iter().enumerate() {
                for n in (i..c.r_usize()).step_by(stride) {
                    let a = c.gamma_pow(2 * n as i64);
                    let v = g.eval(a);
                    assert_eq!(c.mul(v, v), a, "k = {k}, i = {i}, m = {m}");
                }
            }
        }
    }
}
