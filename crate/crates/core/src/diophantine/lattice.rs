//! Exact integer linear algebra on small matrices (checked `i128`).

use num_integer::Integer;

use crate::error::{Error, Result};

fn overflow() -> Error {
    Error::Numerical("integer overflow in lattice reduction".into())
}

fn mul_add(a: i128, x: i128, b: i128, y: i128) -> Result<i128> {
    a.checked_mul(x)
        .and_then(|p| b.checked_mul(y).and_then(|q| p.checked_add(q)))
        .ok_or_else(overflow)
}

/// Z-basis of `{x in Z^ncols : a x = 0}` by unimodular column reduction.
pub fn kernel(a: &[Vec<i128>], ncols: usize) -> Result<Vec<Vec<i128>>> {
    let mut w: Vec<Vec<i128>> = a.to_vec();
    // u[c] is column c of the unimodular transform, stored as a vector.
    let mut u: Vec<Vec<i128>> = (0..ncols)
        .map(|c| (0..ncols).map(|r| i128::from(r == c)).collect())
        .collect();
    let mut pivots = 0usize;
    for row in 0..w.len() {
        // Combine columns pivots.. so that row `row` has a single nonzero.
        loop {
            let nz: Vec<usize> = (pivots..ncols).filter(|&c| w[row][c] != 0).collect();
            if nz.len() <= 1 {
                if let Some(&c) = nz.first() {
                    swap_cols(&mut w, &mut u, c, pivots);
                    pivots += 1;
                }
                break;
            }
            let p = *nz
                .iter()
                .min_by_key(|&&c| w[row][c].unsigned_abs())
                .expect("nonempty");
            let pv = w[row][p];
            for &c in &nz {
                if c == p {
                    continue;
                }
                let q = Integer::div_floor(&w[row][c], &pv);
                col_axpy(&mut w, &mut u, c, p, -q)?;
            }
        }
        if pivots == ncols {
            break;
        }
    }
    Ok((pivots..ncols).map(|c| u[c].clone()).collect())
}

fn swap_cols(w: &mut [Vec<i128>], u: &mut [Vec<i128>], a: usize, b: usize) {
    if a == b {
        return;
    }
    for r in w.iter_mut() {
        r.swap(a, b);
    }
    u.swap(a, b);
}

/// column `dst += q * column src`, in both `w` and `u`.
fn col_axpy(w: &mut [Vec<i128>], u: &mut [Vec<i128>], dst: usize, src: usize, q: i128) -> Result<()> {
    for r in w.iter_mut() {
        r[dst] = mul_add(1, r[dst], q, r[src])?;
    }
    let s = u[src].clone();
    for (x, y) in u[dst].iter_mut().zip(s) {
        *x = mul_add(1, *x, q, y)?;
    }
    Ok(())
}

/// Row Hermite normal form: upper echelon, positive pivots, entries above
/// each pivot reduced into `[0, pivot)`. Zero rows are removed.
pub fn hermite_rows(rows: &[Vec<i128>]) -> Result<Vec<Vec<i128>>> {
    let mut m: Vec<Vec<i128>> = rows.to_vec();
    if m.is_empty() {
        return Ok(m);
    }
    let ncols = m[0].len();
    let mut r = 0usize;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        loop {
            let nz: Vec<usize> = (r..m.len()).filter(|&i| m[i][c] != 0).collect();
            if nz.is_empty() {
                break;
            }
            let p = *nz
                .iter()
                .min_by_key(|&&i| m[i][c].unsigned_abs())
                .expect("nonempty");
            m.swap(r, p);
            if nz.len() == 1 {
                break;
            }
            for i in r + 1..m.len() {
                if m[i][c] != 0 {
                    let q = Integer::div_floor(&m[i][c], &m[r][c]);
                    row_axpy(&mut m, i, r, -q)?;
                }
            }
            if (r + 1..m.len()).all(|i| m[i][c] == 0) {
                break;
            }
        }
        if m[r][c] == 0 {
            continue;
        }
        if m[r][c] < 0 {
            for x in m[r].iter_mut() {
                *x = -*x;
            }
        }
        for i in 0..r {
            let q = Integer::div_floor(&m[i][c], &m[r][c]);
            if q != 0 {
                row_axpy(&mut m, i, r, -q)?;
            }
        }
        r += 1;
    }
    m.truncate(r);
    m.retain(|row| row.iter().any(|&x| x != 0));
    Ok(m)
}

fn row_axpy(m: &mut [Vec<i128>], dst: usize, src: usize, q: i128) -> Result<()> {
    let s = m[src].clone();
    for (x, y) in m[dst].iter_mut().zip(s) {
        *x = mul_add(1, *x, q, y)?;
    }
    Ok(())
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn det(m: &[Vec<i128>]) -> Result<i128> {
    let n = m.len();
    if n == 0 {
        return Ok(1);
    }
    let mut a = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = mul_add(a[i][j], a[k][k], -a[i][k], a[k][j])?;
                a[i][j] = v / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[n - 1][n - 1])
}

/// Integer coordinates of `p` in an HNF basis, or `None` when `p` is not in
/// the lattice.
pub fn coords_in_basis(basis: &[Vec<i128>], p: &[i128]) -> Result<Option<Vec<i128>>> {
    let mut rest = p.to_vec();
    let mut coords = Vec::with_capacity(basis.len());
    for b in basis {
        let piv = b.iter().position(|&x| x != 0).expect("basis rows are nonzero");
        if rest[piv] % b[piv] != 0 {
            return Ok(None);
        }
        let c = rest[piv] / b[piv];
        for (x, y) in rest.iter_mut().zip(b) {
            *x = mul_add(1, *x, -c, *y)?;
        }
        coords.push(c);
    }
    Ok(rest.iter().all(|&x| x == 0).then_some(coords))
}

pub fn gcd_all(v: &[i128]) -> i128 {
    v.iter().fold(0i128, |g, &x| g.gcd(&x))
}

/// gcd of all maximal minors of the `j x d` matrix `rows` (`j <= d`).
/// Equal to 1 exactly when the rows extend to a basis of `Z^d`.
pub fn gcd_of_minors(rows: &[Vec<i128>]) -> Result<i128> {
    let j = rows.len();
    if j == 0 {
        return Ok(1);
    }
    let d = rows[0].len();
    let mut g = 0i128;
    for cols in combinations(d, j) {
        let sub: Vec<Vec<i128>> = rows
            .iter()
            .map(|r| cols.iter().map(|&c| r[c]).collect())
            .collect();
        g = g.gcd(&det(&sub)?);
        if g == 1 {
            break;
        }
    }
    Ok(g)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_of_single_row() {
        let k = kernel(&[vec![3, 2]], 2).unwrap();
        assert_eq!(k.len(), 1);
        assert_eq!(hermite_rows(&k).unwrap(), vec![vec![2, -3]]);
    }

    #[test]
    fn hermite_normalizes_signs() {
        let h = hermite_rows(&[vec![0, -1, 0], vec![-1, 0, 0]]).unwrap();
        assert_eq!(h, vec![vec![1, 0, 0], vec![0, 1, 0]]);
    }

    #[test]
    fn determinant_and_minors() {
        assert_eq!(det(&[vec![3, 5], vec![2, 3]]).unwrap(), -1);
        assert_eq!(det(&[vec![2, 0, 1], vec![1, 1, 1], vec![1, 0, 1]]).unwrap(), 1);
        assert_eq!(gcd_of_minors(&[vec![2, 4, 6]]).unwrap(), 2);
        assert_eq!(gcd_of_minors(&[vec![2, 3, 0]]).unwrap(), 1);
    }

    #[test]
    fn coordinates_in_hnf_basis() {
        let b = hermite_rows(&[vec![3, 2]]).unwrap();
        assert_eq!(coords_in_basis(&b, &[6, 4]).unwrap(), Some(vec![2]));
        assert_eq!(coords_in_basis(&b, &[1, 1]).unwrap(), None);
    }

    proptest! {
        #[test]
        fn kernel_vectors_annihilate(a in proptest::collection::vec(-9i128..9, 6)) {
            let rows = vec![a[..3].to_vec(), a[3..].to_vec()];
            let k = kernel(&rows, 3).unwrap();
            for v in &k {
                for r in &rows {
                    prop_assert_eq!(r.iter().zip(v).map(|(x, y)| x * y).sum::<i128>(), 0);
                }
            }
            // rank-nullity over Q
            let h = hermite_rows(&rows).unwrap();
            prop_assert_eq!(h.len() + k.len(), 3);
        }

        #[test]
        fn hermite_preserves_determinant_magnitude(a in proptest::collection::vec(-9i128..9, 4)) {
            let m = vec![a[..2].to_vec(), a[2..].to_vec()];
            let d = det(&m).unwrap();
            let h = hermite_rows(&m).unwrap();
            if d != 0 {
                prop_assert_eq!(det(&h).unwrap(), d.abs());
            } else {
                prop_assert!(h.len() < 2);
            }
        }
    }
}
