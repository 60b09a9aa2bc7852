/// Inputs to one attachment round.
pub struct AttachInput<'a> {
    /// Current RSRP in dBm, UE-major (`ue * n_cells + cell`); `-inf` for
    /// cells that do not radiate.
    pub rsrp: &'a [f64],
    pub n_cells: usize,
    /// Cells that accept new UEs (Active, not ramping or sleeping).
    pub accepting: &'a [bool],
    pub capacity: &'a [u32],
    pub rsrp_min_dbm: f64,
    pub hysteresis_db: f64,
}

/// Best-server attachment with handover hysteresis and per-cell capacity.
///
/// A UE keeps a serving cell whose RSRP is still at least `rsrp_min_dbm`
/// unless an accepting cell beats it by `hysteresis_db`. UEs without a
/// valid serving cell take the strongest accepting cell above the floor
/// that still has room, or detach. UEs are processed in index order.
pub fn attach_ues(input: &AttachInput<'_>, serving: &[Option<usize>]) -> Vec<Option<usize>> {
    let n = input.n_cells;
    let row = |u: usize| &input.rsrp[u * n..(u + 1) * n];
    let mut load = vec![0u32; n];
    let keeps: Vec<Option<usize>> = serving
        .iter()
        .enumerate()
        .map(|(u, s)| s.filter(|&c| row(u)[c] >= input.rsrp_min_dbm))
        .collect();
    for c in keeps.iter().flatten() {
        load[*c] += 1;
    }

    let mut out = keeps.clone();
    for (u, kept) in keeps.iter().enumerate() {
        let r = row(u);
        let mut best: Option<usize> = None;
        for c in 0..n {
            if Some(c) == *kept || !input.accepting[c] || load[c] >= input.capacity[c] {
                continue;
            }
            if r[c] < input.rsrp_min_dbm {
                continue;
            }
            if best.is_none_or(|b| r[c] > r[b]) {
                best = Some(c);
            }
        }
        match (*kept, best) {
            (Some(s), Some(b)) if r[b] >= r[s] + input.hysteresis_db => {
                load[s] -= 1;
                load[b] += 1;
                out[u] = Some(b);
            }
            (Some(_), _) => {}
            (None, Some(b)) => {
                load[b] += 1;
                out[u] = Some(b);
            }
            (None, None) => out[u] = None,
        }
    }
    out
}
