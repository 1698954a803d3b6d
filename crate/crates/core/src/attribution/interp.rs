/// Bilinear resize of a row-major `src_h x src_w` map with corner-aligned
/// sampling: the four corner samples of the output coincide with the input
/// corners.
pub fn bilinear_resize(
    src: &[f64],
    src_h: usize,
    src_w: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<f64> {
    assert_eq!(src.len(), src_h * src_w, "source length");
    assert!(src_h > 0 && src_w > 0, "empty source");
    let ys = sample_positions(src_h, out_h);
    let xs = sample_positions(src_w, out_w);
    let mut out = Vec::with_capacity(out_h * out_w);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = src[y0 * src_w + x0] * (1.0 - fx) + src[y0 * src_w + x1] * fx;
            let bottom = src[y1 * src_w + x0] * (1.0 - fx) + src[y1 * src_w + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

fn sample_positions(src: usize, out: usize) -> Vec<(usize, usize, f64)> {
    (0..out)
        .map(|i| {
            let pos = if out > 1 {
                i as f64 * (src - 1) as f64 / (out - 1) as f64
            } else {
                0.0
            };
            let i0 = (pos.floor() as usize).min(src - 1);
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}
