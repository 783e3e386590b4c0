//! LU factorization with partial pivoting: determinants and inverses.

use super::Matrix;
use crate::error::{Error, Result};

struct Lu {
    factors: Matrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

fn factor(a: &Matrix) -> Lu {
    let d = a.dim();
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..d).collect();
    let mut sign = 1.0;
    let mut singular = false;
    for k in 0..d {
        let mut pivot = k;
        let mut best = m.get(k, k).abs();
        for i in (k + 1)..d {
            let v = m.get(i, k).abs();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if best == 0.0 {
            singular = true;
            continue;
        }
        if pivot != k {
            for j in 0..d {
                let tmp = m.get(k, j);
                m.set(k, j, m.get(pivot, j));
                m.set(pivot, j, tmp);
            }
            perm.swap(k, pivot);
            sign = -sign;
        }
        let pk = m.get(k, k);
        for i in (k + 1)..d {
            let l = m.get(i, k) / pk;
            m.set(i, k, l);
            if l != 0.0 {
                for j in (k + 1)..d {
                    let v = m.get(i, j) - l * m.get(k, j);
                    m.set(i, j, v);
                }
            }
        }
    }
    Lu {
        factors: m,
        perm,
        sign,
        singular,
    }
}

pub(super) fn det(a: &Matrix) -> f64 {
    let lu = factor(a);
    if lu.singular {
        return 0.0;
    }
    let d = a.dim();
    let mut det = lu.sign;
    for k in 0..d {
        det *= lu.factors.get(k, k);
    }
    det
}

pub(super) fn inverse(a: &Matrix) -> Result<Matrix> {
    let lu = factor(a);
    if lu.singular {
        return Err(Error::SingularInput("matrix is not invertible"));
    }
    let d = a.dim();
    let mut inv = Matrix::zeros(d);
    let mut col = vec![0.0; d];
    for rhs in 0..d {
        // forward substitution on the permuted unit vector
        for i in 0..d {
            let mut x = if lu.perm[i] == rhs { 1.0 } else { 0.0 };
            for (j, &cj) in col.iter().enumerate().take(i) {
                x -= lu.factors.get(i, j) * cj;
            }
            col[i] = x;
        }
        // back substitution
        for i in (0..d).rev() {
            let mut x = col[i];
            for (j, &cj) in col.iter().enumerate().skip(i + 1) {
                x -= lu.factors.get(i, j) * cj;
            }
            col[i] = x / lu.factors.get(i, i);
        }
        inv.set_column(rhs, &col);
    }
    Ok(inv)
}
