/// Picks the factor pair `(grid_h, grid_w)` of `tokens` whose aspect
/// `grid_w / grid_h` is closest to `image_w / image_h`. Ties go to the wider
/// grid.
pub fn infer_grid(tokens: usize, image_w: u32, image_h: u32) -> Option<(usize, usize)> {
    if tokens == 0 || image_w == 0 || image_h == 0 {
        return None;
    }
    let target = f64::from(image_w) / f64::from(image_h);
    let mut best: Option<(usize, usize, f64)> = None;
    for h in 1..=tokens {
        if tokens % h != 0 {
            continue;
        }
        let w = tokens / h;
        let err = (w as f64 / h as f64 - target).abs();
        let better = match best {
            None => true,
            Some((_, bw, be)) => err < be || (err == be && w > bw),
        };
        if better {
            best = Some((h, w, err));
        }
    }
    best.map(|(h, w, _)| (h, w))
}
