//! Small dense linear algebra: LU solves, a Cholesky positivity test and a
//! Lyapunov-equation stability criterion for the 4×4 drift matrix.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::NumAssign;

use crate::ode::Component;

/// Solves `a x = b` in place (`a` is `n×n` row-major, overwritten; `b`
/// becomes `x`). Returns `None` if `a` is numerically singular.
pub fn solve_in_place<T>(a: &mut [T], n: usize, b: &mut [T]) -> Option<()>
where
    T: Component + NumAssign,
{
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.modulus()));
    if scale == 0.0 {
        return None;
    }
    let tiny = scale * 1e3 * f64::EPSILON;

    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, a[r * n + col].modulus()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_mag <= tiny {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor.modulus() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[r * n + j] -= factor * v;
            }
            let v = b[col];
            b[r] -= factor * v;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for j in col + 1..n {
            acc -= a[col * n + j] * b[j];
        }
        b[col] = acc / a[col * n + col];
    }
    Some(())
}

/// True if the Hermitian part of the `n×n` matrix `m` is positive definite.
pub fn is_positive_definite(m: &[C64], n: usize) -> bool {
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = 0.5 * (m[j * n + j] + m[j * n + j].conj()).re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = 0.5 * (m[i * n + j] + m[j * n + i].conj());
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / d;
        }
    }
    true
}

/// Solves the Lyapunov equation `K P + P K^H = -Q` for `P` (4×4).
pub fn lyapunov4(k: &[[C64; 4]; 4], q: &[[C64; 4]; 4]) -> Option<[[C64; 4]; 4]> {
    const N: usize = 4;
    let zero = C64::new(0.0, 0.0);
    let mut sys = vec![zero; N * N * N * N];
    let mut rhs: Vec<C64> = Vec::with_capacity(N * N);
    for i in 0..N {
        for j in 0..N {
            let row = i * N + j;
            // (K P)_ij = sum_l K_il P_lj ; (P K^H)_ij = sum_l P_il conj(K_jl)
            for l in 0..N {
                sys[row * N * N + l * N + j] += k[i][l];
                sys[row * N * N + i * N + l] += k[j][l].conj();
            }
            rhs.push(-q[i][j]);
        }
    }
    solve_in_place(&mut sys, N * N, &mut rhs)?;
    let mut p = [[zero; 4]; 4];
    for i in 0..N {
        for j in 0..N {
            p[i][j] = rhs[i * N + j];
        }
    }
    Some(p)
}

/// Strict stability (all eigenvalues in the open left half plane) by the
/// Lyapunov criterion: `K P + P K^H = -I` has a positive definite solution.
pub fn is_hurwitz4(k: &[[C64; 4]; 4]) -> bool {
    let mut q = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in q.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    match lyapunov4(k, &q) {
        Some(p) => {
            let flat: Vec<C64> = p.iter().flatten().copied().collect();
            is_positive_definite(&flat, 4)
        }
        None => false,
    }
}
