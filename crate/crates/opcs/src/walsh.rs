//! Sylvester-ordered Walsh-Hadamard helpers: row generation and the fast
//! transform used by the matrix-free measurement operator.

/// Entry (j, r) of the order-`side` Sylvester matrix: (-1)^popcount(j & r).
#[inline]
pub fn sylvester_entry(j: usize, r: usize) -> i8 {
    if (j & r).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Row `j` of the order-`side` Sylvester matrix.
pub fn sylvester_row(side: usize, j: usize) -> Vec<i8> {
    (0..side).map(|r| sylvester_entry(j, r)).collect()
}

/// In-place unnormalized fast Walsh-Hadamard transform (natural order).
/// Self-inverse up to a factor of `data.len()`.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (data[i], data[i + h]);
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// In-place 2-D transform of a row-major `side` x `side` buffer:
/// rows then columns, i.e. X -> H X H (H symmetric).
pub fn fwht_2d(buf: &mut [f64], side: usize) {
    debug_assert_eq!(buf.len(), side * side);
    for row in buf.chunks_mut(side) {
        fwht(row);
    }
    let mut col = vec![0.0; side];
    for c in 0..side {
        for r in 0..side {
            col[r] = buf[r * side + c];
        }
        fwht(&mut col);
        for r in 0..side {
            buf[r * side + c] = col[r];
        }
    }
}

/// Index of the Sylvester row equal to `v` (entries +/-1), if any.
pub fn sylvester_index(v: &[i8]) -> Option<usize> {
    let n = v.len();
    if !n.is_power_of_two() {
        return None;
    }
    let mut buf: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
    fwht(&mut buf);
    let mut found = None;
    for (i, &x) in buf.iter().enumerate() {
        if x == n as f64 {
            if found.is_some() {
                return None;
            }
            found = Some(i);
        } else if x != 0.0 {
            return None;
        }
    }
    found
}
