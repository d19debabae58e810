//! Brute-force oracles, deliberately independent of the library's
//! reduction algorithms: explicit span membership over F_p, additive
//! closure enumeration, linear-algebra kernels, and exact integer
//! determinants. Only usable at tiny sizes, which is the point.

use iwasawa_core::algebra::AlgebraElement;
use iwasawa_core::cyclo::{char_eval, ramification_index};
use iwasawa_core::snf::PMatrix;
use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// Row-reduce a list of F_p vectors in place; returns the echelon basis.
fn echelonize(p: u64, mut rows: Vec<Vec<u64>>) -> Vec<Vec<u64>> {
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let width = rows.first().map_or(0, |r| r.len());
    let inv = |a: u64| -> u64 {
        // Fermat inverse mod a small prime
        let mut acc = 1u64;
        let mut base = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        acc
    };
    'next: while let Some(mut row) = rows.pop() {
        for b in &basis {
            let lead = b.iter().position(|&x| x != 0).unwrap();
            if row[lead] != 0 {
                let c = row[lead];
                for j in 0..width {
                    row[j] = (row[j] + (p - c) * b[j]) % p;
                }
            }
        }
        if let Some(lead) = row.iter().position(|&x| x != 0) {
            let c = inv(row[lead]);
            for x in row.iter_mut() {
                *x = *x * c % p;
            }
            // keep earlier basis rows reduced against the new one
            for b in basis.iter_mut() {
                if b[lead] != 0 {
                    let c = b[lead];
                    for j in 0..width {
                        b[j] = (b[j] + (p - c) * row[j]) % p;
                    }
                }
            }
            basis.push(row);
            continue 'next;
        }
    }
    basis.sort_by_key(|b| b.iter().position(|&x| x != 0).unwrap());
    basis
}

fn in_span(p: u64, basis: &[Vec<u64>], target: &[u64]) -> bool {
    let mut row = target.to_vec();
    for b in basis {
        let lead = b.iter().position(|&x| x != 0).unwrap();
        if row[lead] != 0 {
            let c = row[lead];
            for j in 0..row.len() {
                row[j] = (row[j] + (p - c) * b[j]) % p;
            }
        }
    }
    row.iter().all(|&x| x == 0)
}

fn mod_p_vector(f: &AlgebraElement) -> Vec<u64> {
    f.coeffs()
        .iter()
        .map(|c| (c % f.p()).to_u64().unwrap())
        .collect()
}

/// F_p-span of the k-th power of the augmentation ideal in F_p[G_n]:
/// all rotations of the coefficient vector of (gamma - 1)^k.
fn augmentation_power_span(p: u64, n: u32, k: usize) -> Vec<Vec<u64>> {
    let size = (p as usize).pow(n);
    // (gamma - 1)^k mod p by direct polynomial powering
    let mut poly = vec![0u64; size];
    poly[0] = 1;
    for _ in 0..k {
        let mut next = vec![0u64; size];
        for (i, &c) in poly.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let up = (i + 1) % size;
            next[up] = (next[up] + c) % p;
            next[i] = (next[i] + (p - 1) * c) % p;
        }
        poly = next;
    }
    let rows = (0..size)
        .map(|r| {
            let mut row = vec![0u64; size];
            for (i, &c) in poly.iter().enumerate() {
                row[(i + r) % size] = c;
            }
            row
        })
        .collect();
    echelonize(p, rows)
}

/// lambda by explicit span membership: the largest k with the mod-p
/// reduction inside the span of the k-th augmentation power. Returns
/// `None` when the reduction is zero (mu > 0).
pub fn lambda_by_span(f: &AlgebraElement) -> Option<u64> {
    let v = mod_p_vector(f);
    if v.iter().all(|&x| x == 0) {
        return None;
    }
    let (p, n) = (f.p(), f.level());
    let size = (p as usize).pow(n);
    let mut lambda = 0;
    for k in 1..=size {
        let span = augmentation_power_span(p, n, k);
        if !span.is_empty() && in_span(p, &span, &v) {
            lambda = k as u64;
        } else {
            break;
        }
    }
    Some(lambda)
}

/// The stacked evaluation matrix of the characters of tower levels `ms`:
/// one block of phi(p^m) rows per m, column c holding the image of
/// gamma^c. Its kernel mod p^N is the simultaneous-vanishing module.
pub fn character_matrix(p: u64, prec: u32, n: u32, ms: &[u32]) -> PMatrix {
    let cols = (p as usize).pow(n);
    let rows: usize = ms
        .iter()
        .map(|&m| ramification_index(p, m) as usize)
        .sum();
    let mut entries = vec![BigUint::from(0u32); rows * cols];
    for c in 0..cols {
        let monomial = AlgebraElement::monomial(p, prec, n, c).unwrap();
        let mut row_base = 0usize;
        for &m in ms {
            let image = char_eval(&monomial, m).unwrap();
            for (i, coeff) in image.coeffs().iter().enumerate() {
                entries[(row_base + i) * cols + c] = coeff.clone();
            }
            row_base += ramification_index(p, m) as usize;
        }
    }
    PMatrix::new(p, prec, rows, cols, entries).unwrap()
}

/// Order of the quotient of (Z/p^N)^(p^n) by the additive closure of all
/// rotations of the generators, by literal enumeration of the closure.
pub fn quotient_order_by_enumeration(gens: &[&AlgebraElement]) -> BigUint {
    let first = gens[0];
    let (p, prec) = (first.p(), first.prec());
    let size = (p as usize).pow(first.level());
    let modulus = p.pow(prec);
    let encode = |v: &[u64]| -> u64 {
        v.iter().fold(0u64, |acc, &x| acc * modulus + x)
    };
    let mut rotations: Vec<Vec<u64>> = Vec::new();
    for g in gens {
        let base: Vec<u64> = g.coeffs().iter().map(|c| c.to_u64().unwrap()).collect();
        for r in 0..size {
            let mut rot = vec![0u64; size];
            for (i, &x) in base.iter().enumerate() {
                rot[(i + r) % size] = x;
            }
            rotations.push(rot);
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut frontier = vec![vec![0u64; size]];
    seen.insert(encode(&frontier[0]));
    while let Some(v) = frontier.pop() {
        for rot in &rotations {
            let sum: Vec<u64> = v
                .iter()
                .zip(rot)
                .map(|(a, b)| (a + b) % modulus)
                .collect();
            if seen.insert(encode(&sum)) {
                frontier.push(sum);
            }
        }
    }
    let total = BigUint::from(modulus).pow(size as u32);
    assert!((&total % BigUint::from(seen.len())).to_u64() == Some(0));
    total / BigUint::from(seen.len())
}

/// Fraction-free (Bareiss) determinant of a small integer matrix.
fn bareiss_det(mut m: Vec<i128>, n: usize) -> i128 {
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k * n + k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| m[i * n + k] != 0) else {
                return 0;
            };
            for j in 0..n {
                m.swap(k * n + j, swap * n + j);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j];
                m[i * n + j] = num / prev; // exact by Bareiss
            }
            m[i * n + k] = 0;
        }
        prev = m[k * n + k];
    }
    sign * m[n * n - 1]
}

fn v_p_i128(p: u64, mut x: i128) -> u32 {
    assert!(x != 0);
    x = x.abs();
    let p = p as i128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// p-exponent of the cokernel order of the rotation matrix of the
/// generators, via the gcd of all maximal minors computed in exact
/// integer arithmetic: the product of the elementary divisors of an
/// integer matrix is the gcd of its full-size minors, so its p-part is
/// the quotient order exponent whenever the quotient is finite.
/// Returns `None` when every maximal minor vanishes over Z.
pub fn quotient_order_by_minors(gens: &[&AlgebraElement]) -> Option<u32> {
    let first = gens[0];
    let p = first.p();
    let size = (p as usize).pow(first.level());
    let cols = size * gens.len();
    // integer rotation matrix, canonical representatives
    let mut full = vec![0i128; size * cols];
    for (b, g) in gens.iter().enumerate() {
        for c in 0..size {
            for (i, coeff) in g.coeffs().iter().enumerate() {
                full[((i + c) % size) * cols + b * size + c] = coeff.to_i128().unwrap();
            }
        }
    }
    let mut best: Option<u32> = None;
    // all size-subsets of columns
    let mut pick: Vec<usize> = (0..size).collect();
    loop {
        let minor: Vec<i128> = (0..size)
            .flat_map(|r| pick.iter().map(move |&c| (r, c)))
            .map(|(r, c)| full[r * cols + c])
            .collect();
        let det = bareiss_det(minor, size);
        if det != 0 {
            let v = v_p_i128(p, det);
            best = Some(best.map_or(v, |b| b.min(v)));
            if best == Some(0) {
                break;
            }
        }
        // next combination
        let mut i = size;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] != i + cols - size {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..size {
            pick[j] = pick[j - 1] + 1;
        }
    }
    best
}
