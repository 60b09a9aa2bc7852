//! Propagation, link quality and downlink PRB scheduling.
//!
//! Path loss follows the 3GPP TR 38.901 UMa and UMi street-canyon closed
//! forms, including LOS probability and log-normal shadowing. Antennas are
//! isotropic, so RSRP is the per-resource-element transmit power minus path
//! loss.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::scenario::ChannelModel;

const SPEED_OF_LIGHT: f64 = 3.0e8;
/// Effective environment height for the UMa breakpoint distance.
const ENV_HEIGHT_M: f64 = 1.0;
const UT_HEIGHT_RANGE_M: (f64, f64) = (1.5, 22.5);
pub const INDOOR_PENETRATION_DB: f64 = 20.0;
pub const SUBCARRIER_SPACING_HZ: f64 = 30.0e3;
pub const SUBCARRIERS_PER_PRB: u32 = 12;
const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("carrier frequency {0} GHz outside the supported 0.5..=100 GHz range")]
    FrequencyOutOfRange(f64),
}

/// Random inputs of one UE-cell link.
///
/// `los_draw` is uniform on [0, 1): the link is LOS while it is below the
/// LOS probability at the current distance. `shadow_z` is a standard normal
/// deviate scaled by the model's shadow-fading sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDraws {
    pub los_draw: f64,
    pub shadow_z: f64,
}

impl LinkDraws {
    /// LOS whenever LOS is possible, no shadowing.
    pub const LOS: LinkDraws = LinkDraws {
        los_draw: 0.0,
        shadow_z: 0.0,
    };
    /// Always NLOS, no shadowing.
    pub const NLOS: LinkDraws = LinkDraws {
        los_draw: 1.0,
        shadow_z: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub d2d_m: f64,
    pub h_bs_m: f64,
    pub h_ut_m: f64,
}

pub fn los_probability(model: ChannelModel, d2d_m: f64, h_ut_m: f64) -> f64 {
    if d2d_m <= 18.0 {
        return 1.0;
    }
    match model {
        ChannelModel::UMa => {
            let h = h_ut_m.min(23.0);
            let c = if h <= 13.0 {
                0.0
            } else {
                ((h - 13.0) / 10.0).powf(1.5)
            };
            let base = 18.0 / d2d_m + (-d2d_m / 63.0).exp() * (1.0 - 18.0 / d2d_m);
            base * (1.0 + c * 1.25 * (d2d_m / 100.0).powi(3) * (-d2d_m / 150.0).exp())
        }
        ChannelModel::UMi => 18.0 / d2d_m + (-d2d_m / 36.0).exp() * (1.0 - 18.0 / d2d_m),
    }
}

fn shadow_sigma_db(model: ChannelModel, los: bool) -> f64 {
    match (model, los) {
        (ChannelModel::UMa, true) => 4.0,
        (ChannelModel::UMa, false) => 6.0,
        (ChannelModel::UMi, true) => 4.0,
        (ChannelModel::UMi, false) => 7.82,
    }
}

/// Shadow-fading decorrelation distance used for the spatial AR(1) update.
pub fn decorrelation_distance_m(model: ChannelModel) -> f64 {
    match model {
        ChannelModel::UMa => 50.0,
        ChannelModel::UMi => 13.0,
    }
}

fn los_path_loss(model: ChannelModel, d2d: f64, d3d: f64, h_bs: f64, h_ut: f64, f_ghz: f64) -> f64 {
    let (h_bs_eff, h_ut_eff) = match model {
        ChannelModel::UMa => (h_bs - ENV_HEIGHT_M, h_ut - ENV_HEIGHT_M),
        ChannelModel::UMi => (h_bs - 1.0, h_ut - 1.0),
    };
    let d_bp = 4.0 * h_bs_eff * h_ut_eff * f_ghz * 1.0e9 / SPEED_OF_LIGHT;
    let lf = 20.0 * f_ghz.log10();
    let dh2 = (h_bs - h_ut).powi(2);
    match model {
        ChannelModel::UMa if d2d <= d_bp => 28.0 + 22.0 * d3d.log10() + lf,
        ChannelModel::UMa => 28.0 + 40.0 * d3d.log10() + lf - 9.0 * (d_bp * d_bp + dh2).log10(),
        ChannelModel::UMi if d2d <= d_bp => 32.4 + 21.0 * d3d.log10() + lf,
        ChannelModel::UMi => 32.4 + 40.0 * d3d.log10() + lf - 9.5 * (d_bp * d_bp + dh2).log10(),
    }
}

fn nlos_path_loss(model: ChannelModel, d3d: f64, h_ut: f64, f_ghz: f64) -> f64 {
    match model {
        ChannelModel::UMa => 13.54 + 39.08 * d3d.log10() + 20.0 * f_ghz.log10() - 0.6 * (h_ut - 1.5),
        ChannelModel::UMi => 22.4 + 35.3 * d3d.log10() + 21.3 * f_ghz.log10() - 0.3 * (h_ut - 1.5),
    }
}

/// Path loss in dB for one link.
///
/// Horizontal distance is clamped to at least 1 m and UE height to the
/// 1.5..22.5 m range the closed forms are defined for.
pub fn path_loss(
    model: ChannelModel,
    geom: &LinkGeometry,
    f_ghz: f64,
    indoor: bool,
    draws: &LinkDraws,
) -> Result<f64, RadioError> {
    if !(0.5..=100.0).contains(&f_ghz) {
        return Err(RadioError::FrequencyOutOfRange(f_ghz));
    }
    let d2d = geom.d2d_m.max(1.0);
    let h_ut = geom.h_ut_m.clamp(UT_HEIGHT_RANGE_M.0, UT_HEIGHT_RANGE_M.1);
    let h_bs = geom.h_bs_m;
    let d3d = (d2d * d2d + (h_bs - h_ut).powi(2)).sqrt();
    let los = draws.los_draw < los_probability(model, d2d, h_ut);
    let pl_los = los_path_loss(model, d2d, d3d, h_bs, h_ut, f_ghz);
    let pl = if los {
        pl_los
    } else {
        pl_los.max(nlos_path_loss(model, d3d, h_ut, f_ghz))
    };
    let penetration = if indoor { INDOOR_PENETRATION_DB } else { 0.0 };
    Ok(pl + shadow_sigma_db(model, los) * draws.shadow_z + penetration)
}

/// Seeded per-link randomness with spatially correlated shadowing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkShadow {
    pub draws: LinkDraws,
}

impl LinkShadow {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, shadowing: bool) -> Self {
        let los_draw = rng.random::<f64>();
        let shadow_z = if shadowing {
            rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        Self {
            draws: LinkDraws { los_draw, shadow_z },
        }
    }

    /// Gudmundson update after the UE moved `moved_m` metres.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R, moved_m: f64, decorrelation_m: f64) {
        if moved_m <= 0.0 {
            return;
        }
        let rho = (-moved_m / decorrelation_m).exp();
        let n: f64 = rng.sample(StandardNormal);
        self.draws.shadow_z = rho * self.draws.shadow_z + (1.0 - rho * rho).sqrt() * n;
    }
}

/// PRBs in a carrier at 30 kHz subcarrier spacing.
pub fn prb_count(bandwidth_mhz: f64) -> u32 {
    // Maximum transmission bandwidth configuration, FR1 at 30 kHz SCS.
    const TABLE: [(f64, u32); 13] = [
        (5.0, 11),
        (10.0, 24),
        (15.0, 38),
        (20.0, 51),
        (25.0, 65),
        (30.0, 78),
        (40.0, 106),
        (50.0, 133),
        (60.0, 162),
        (70.0, 189),
        (80.0, 217),
        (90.0, 245),
        (100.0, 273),
    ];
    TABLE
        .iter()
        .find(|(bw, _)| (bw - bandwidth_mhz).abs() < 1e-9)
        .map(|&(_, n)| n)
        .unwrap_or_else(|| {
            let occupied = bandwidth_mhz * 1.0e6 * 0.983;
            ((occupied / (SUBCARRIER_SPACING_HZ * SUBCARRIERS_PER_PRB as f64)) as u32).max(1)
        })
}

/// dB offset from total transmit power to power per resource element.
pub fn per_re_offset_db(bandwidth_mhz: f64) -> f64 {
    10.0 * ((prb_count(bandwidth_mhz) * SUBCARRIERS_PER_PRB) as f64).log10()
}

/// RSRP in dBm. `tx_offset_db` is the ramp offset (0 for an active cell,
/// negative while ramping, `-inf` for a sleeping cell, which yields `-inf`).
pub fn rsrp(tx_power_dbm: f64, tx_offset_db: f64, bandwidth_mhz: f64, path_loss_db: f64) -> f64 {
    if tx_offset_db == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    tx_power_dbm + tx_offset_db - per_re_offset_db(bandwidth_mhz) - path_loss_db
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub rsrp_dbm: f64,
    /// Fraction of resources the interferer transmits on, in [0, 1].
    pub activity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRate {
    pub sinr_db: f64,
    pub rate_per_prb_mbps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub noise_figure_db: f64,
    pub se_cap: f64,
}

impl Default for RateParams {
    fn default() -> Self {
        Self {
            noise_figure_db: 9.0,
            se_cap: 7.4,
        }
    }
}

/// Noise power per resource element in dBm for a carrier of `bandwidth_mhz`.
pub fn noise_per_re_dbm(bandwidth_mhz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * (bandwidth_mhz * 1.0e6).log10() + noise_figure_db
        - per_re_offset_db(bandwidth_mhz)
}

/// SINR and Shannon rate per PRB, capped at `se_cap` bit/s/Hz.
pub fn sinr_and_rate(
    serving_rsrp_dbm: f64,
    interferers: impl IntoIterator<Item = Interferer>,
    bandwidth_mhz: f64,
    params: &RateParams,
) -> LinkRate {
    let interference_mw: f64 = interferers
        .into_iter()
        .map(|i| i.activity * dbm_to_mw(i.rsrp_dbm))
        .sum();
    let noise_mw = dbm_to_mw(noise_per_re_dbm(bandwidth_mhz, params.noise_figure_db));
    let sinr = dbm_to_mw(serving_rsrp_dbm) / (interference_mw + noise_mw);
    let se = (1.0 + sinr).log2().min(params.se_cap);
    let prb_hz = SUBCARRIER_SPACING_HZ * SUBCARRIERS_PER_PRB as f64;
    LinkRate {
        sinr_db: 10.0 * sinr.log10(),
        rate_per_prb_mbps: se * prb_hz / 1.0e6,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrbRequest<'a> {
    pub ue_id: &'a str,
    pub demand_mbps: f64,
    pub rate_per_prb_mbps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrbAllocation {
    /// PRBs granted, index-aligned with the requests.
    pub counts: Vec<u32>,
    pub total_prbs: u32,
}

impl PrbAllocation {
    pub fn allocated(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn utilization(&self) -> f64 {
        if self.total_prbs == 0 {
            0.0
        } else {
            self.allocated() as f64 / self.total_prbs as f64
        }
    }
}

struct Pending<'a> {
    unmet: f64,
    ue_id: &'a str,
    idx: usize,
}

impl PartialEq for Pending<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending<'_> {}
impl PartialOrd for Pending<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending<'_> {
    // Max-heap on unmet demand; ties go to the smaller ue_id.
    fn cmp(&self, other: &Self) -> Ordering {
        self.unmet
            .total_cmp(&other.unmet)
            .then_with(|| other.ue_id.cmp(self.ue_id))
    }
}

const MET_EPS_MBPS: f64 = 1e-9;

/// Demand-capped round robin: one PRB at a time to the UE with the largest
/// unmet demand until every demand is met or the carrier is exhausted.
pub fn allocate_prbs(total_prbs: u32, requests: &[PrbRequest<'_>]) -> PrbAllocation {
    let mut counts = vec![0u32; requests.len()];
    let mut heap: BinaryHeap<Pending<'_>> = requests
        .iter()
        .enumerate()
        .filter(|(_, r)| r.demand_mbps > MET_EPS_MBPS && r.rate_per_prb_mbps > 0.0)
        .map(|(idx, r)| Pending {
            unmet: r.demand_mbps,
            ue_id: r.ue_id,
            idx,
        })
        .collect();
    let mut left = total_prbs;
    while left > 0 {
        let Some(mut top) = heap.pop() else { break };
        counts[top.idx] += 1;
        left -= 1;
        let r = &requests[top.idx];
        top.unmet = r.demand_mbps - counts[top.idx] as f64 * r.rate_per_prb_mbps;
        if top.unmet > MET_EPS_MBPS {
            heap.push(top);
        }
    }
    PrbAllocation { counts, total_prbs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn geom(d: f64, h_bs: f64) -> LinkGeometry {
        LinkGeometry {
            d2d_m: d,
            h_bs_m: h_bs,
            h_ut_m: 1.5,
        }
    }

    // Golden values from a separate evaluation of the TR 38.901 closed forms.
    #[test]
    fn uma_golden_values() {
        let los = path_loss(ChannelModel::UMa, &geom(100.0, 20.0), 3.9, false, &LinkDraws::LOS).unwrap();
        assert!((los - 83.982_057_488_445_49).abs() < TOL, "{los}");
        let nlos = path_loss(ChannelModel::UMa, &geom(100.0, 20.0), 3.9, false, &LinkDraws::NLOS).unwrap();
        assert!((nlos - 103.806_869_858_554_45).abs() < TOL, "{nlos}");
        let far = path_loss(ChannelModel::UMa, &geom(800.0, 20.0), 3.9, false, &LinkDraws::LOS).unwrap();
        assert!((far - 107.456_972_339_516_45).abs() < TOL, "{far}");
    }

    #[test]
    fn umi_golden_values() {
        let los = path_loss(ChannelModel::UMi, &geom(50.0, 10.0), 4.05, false, &LinkDraws::LOS).unwrap();
        assert!((los - 80.357_388_811_185_91).abs() < TOL, "{los}");
        let nlos = path_loss(ChannelModel::UMi, &geom(50.0, 10.0), 4.05, false, &LinkDraws::NLOS).unwrap();
        assert!((nlos - 95.530_819_549_010_84).abs() < TOL, "{nlos}");
        let far = path_loss(ChannelModel::UMi, &geom(300.0, 10.0), 4.05, false, &LinkDraws::LOS).unwrap();
        assert!((far - 98.309_356_421_144_77).abs() < TOL, "{far}");
    }

    #[test]
    fn los_probability_golden_values() {
        assert!((los_probability(ChannelModel::UMa, 100.0, 1.5) - 0.347_670_836_844_231_2).abs() < TOL);
        assert!((los_probability(ChannelModel::UMi, 50.0, 1.5) - 0.519_585_413_617_431_4).abs() < TOL);
        assert_eq!(los_probability(ChannelModel::UMi, 10.0, 1.5), 1.0);
    }

    #[test]
    fn zero_distance_clamps_to_one_metre() {
        for model in [ChannelModel::UMa, ChannelModel::UMi] {
            let a = path_loss(model, &geom(0.0, 20.0), 3.9, false, &LinkDraws::NLOS).unwrap();
            let b = path_loss(model, &geom(1.0, 20.0), 3.9, false, &LinkDraws::NLOS).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn distance_monotonicity() {
        for draws in [LinkDraws::LOS, LinkDraws::NLOS] {
            let near = path_loss(ChannelModel::UMa, &geom(100.0, 20.0), 3.9, false, &draws).unwrap();
            let far = path_loss(ChannelModel::UMa, &geom(2000.0, 20.0), 3.9, false, &draws).unwrap();
            assert!(far > near);
        }
    }

    #[test]
    fn indoor_adds_fixed_penetration() {
        let out = path_loss(ChannelModel::UMi, &geom(80.0, 10.0), 4.05, false, &LinkDraws::NLOS).unwrap();
        let ins = path_loss(ChannelModel::UMi, &geom(80.0, 10.0), 4.05, true, &LinkDraws::NLOS).unwrap();
        assert!((ins - out - 20.0).abs() < 1e-12);
    }

    #[test]
    fn frequency_out_of_range_is_an_error() {
        let err = path_loss(ChannelModel::UMa, &geom(100.0, 20.0), 0.1, false, &LinkDraws::LOS).unwrap_err();
        assert_eq!(err, RadioError::FrequencyOutOfRange(0.1));
    }

    #[test]
    fn shadowing_scales_by_sigma() {
        let base = path_loss(ChannelModel::UMa, &geom(300.0, 20.0), 3.9, false, &LinkDraws::NLOS).unwrap();
        let shadowed = path_loss(
            ChannelModel::UMa,
            &geom(300.0, 20.0),
            3.9,
            false,
            &LinkDraws {
                los_draw: 1.0,
                shadow_z: 1.5,
            },
        )
        .unwrap();
        assert!((shadowed - base - 9.0).abs() < 1e-12);
    }

    #[test]
    fn carrier_prbs() {
        assert_eq!(prb_count(100.0), 273);
        assert_eq!(prb_count(20.0), 51);
    }

    #[test]
    fn rsrp_composes_with_path_loss() {
        let pl = path_loss(ChannelModel::UMa, &geom(100.0, 20.0), 3.9, false, &LinkDraws::LOS).unwrap();
        let r = rsrp(45.0, 0.0, 100.0, pl);
        assert!((r - (-74.135_496_419_329_3)).abs() < TOL, "{r}");
    }

    #[test]
    fn sleeping_cell_has_no_signal() {
        assert_eq!(rsrp(32.0, f64::NEG_INFINITY, 100.0, 90.0), f64::NEG_INFINITY);
    }

    #[test]
    fn ramp_offset_is_linear_in_db() {
        let nominal = rsrp(32.0, 0.0, 100.0, 95.0);
        let ramped = rsrp(32.0, -6.0, 100.0, 95.0);
        assert!((nominal - ramped - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rate_saturates_at_cap() {
        let r = sinr_and_rate(-40.0, [], 100.0, &RateParams::default());
        assert!((r.rate_per_prb_mbps - 7.4 * 0.36).abs() < 1e-12);
    }

    #[test]
    fn equal_interferer_gives_non_positive_sinr() {
        let r = sinr_and_rate(
            -80.0,
            [Interferer {
                rsrp_dbm: -80.0,
                activity: 1.0,
            }],
            100.0,
            &RateParams::default(),
        );
        assert!(r.sinr_db <= 0.0);
    }

    #[test]
    fn mid_sinr_matches_scalar_shannon() {
        // Serving -95 dBm/RE, one interferer at -105 dBm/RE fully loaded.
        let noise_dbm = -174.0 + 10.0 * (100.0e6f64).log10() + 9.0 - 10.0 * (3276.0f64).log10();
        let s = 10f64.powf(-9.5);
        let i = 10f64.powf(-10.5);
        let n = 10f64.powf(noise_dbm / 10.0);
        let expected_se = (1.0 + s / (i + n)).log2();
        let r = sinr_and_rate(
            -95.0,
            [Interferer {
                rsrp_dbm: -105.0,
                activity: 1.0,
            }],
            100.0,
            &RateParams::default(),
        );
        assert!(expected_se < 7.4);
        assert!((r.rate_per_prb_mbps - expected_se * 0.36).abs() < 1e-12);
        assert!((r.sinr_db - 10.0 * (s / (i + n)).log10()).abs() < 1e-9);
    }

    #[test]
    fn single_ue_exact_division() {
        let a = allocate_prbs(
            273,
            &[PrbRequest {
                ue_id: "u1",
                demand_mbps: 20.0,
                rate_per_prb_mbps: 2.0,
            }],
        );
        assert_eq!(a.counts, vec![10]);
        assert_eq!(a.utilization(), 10.0 / 273.0);
    }

    #[test]
    fn saturation_never_over_serves() {
        let reqs: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|id| PrbRequest {
                ue_id: id,
                demand_mbps: 300.0,
                rate_per_prb_mbps: 1.0,
            })
            .collect();
        let a = allocate_prbs(273, &reqs);
        assert_eq!(a.utilization(), 1.0);
        assert_eq!(a.counts, vec![91, 91, 91]);
        for (c, r) in a.counts.iter().zip(&reqs) {
            assert!(*c as f64 * r.rate_per_prb_mbps <= r.demand_mbps);
        }
    }

    #[test]
    fn odd_budget_tie_goes_to_smaller_id() {
        let reqs = [
            PrbRequest {
                ue_id: "ue-b",
                demand_mbps: 10.0,
                rate_per_prb_mbps: 1.0,
            },
            PrbRequest {
                ue_id: "ue-a",
                demand_mbps: 10.0,
                rate_per_prb_mbps: 1.0,
            },
        ];
        let a = allocate_prbs(3, &reqs);
        assert_eq!(a.counts, vec![1, 2]);
    }

    #[test]
    fn zero_rate_and_zero_demand_get_nothing() {
        let reqs = [
            PrbRequest {
                ue_id: "a",
                demand_mbps: 10.0,
                rate_per_prb_mbps: 0.0,
            },
            PrbRequest {
                ue_id: "b",
                demand_mbps: 0.0,
                rate_per_prb_mbps: 2.0,
            },
        ];
        assert_eq!(allocate_prbs(273, &reqs).counts, vec![0, 0]);
    }

    fn requests_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0f64..200.0, 0.05f64..2.7), 1..12)
    }

    proptest! {
        #[test]
        fn prb_conservation(total in 0u32..300, reqs in requests_strategy()) {
            let ids: Vec<String> = (0..reqs.len()).map(|i| format!("u{i:02}")).collect();
            let r: Vec<_> = reqs.iter().zip(&ids).map(|(&(d, rate), id)| PrbRequest {
                ue_id: id, demand_mbps: d, rate_per_prb_mbps: rate }).collect();
            let a = allocate_prbs(total, &r);
            prop_assert!(a.allocated() <= total);
            prop_assert!((0.0..=1.0).contains(&a.utilization()));
            for (c, q) in a.counts.iter().zip(&r) {
                // never more PRBs than needed to cover the demand
                let needed = (q.demand_mbps / q.rate_per_prb_mbps - MET_EPS_MBPS).ceil().max(0.0) as u32;
                prop_assert!(*c <= needed);
            }
        }

        #[test]
        fn raising_demand_never_lowers_own_grant(
            total in 1u32..300,
            reqs in requests_strategy(),
            which in 0usize..12,
            extra in 0.0f64..100.0,
        ) {
            let which = which % reqs.len();
            let ids: Vec<String> = (0..reqs.len()).map(|i| format!("u{i:02}")).collect();
            let build = |bump: f64| -> Vec<PrbRequest<'_>> {
                reqs.iter().zip(&ids).enumerate().map(|(i, (&(d, rate), id))| PrbRequest {
                    ue_id: id,
                    demand_mbps: if i == which { d + bump } else { d },
                    rate_per_prb_mbps: rate,
                }).collect()
            };
            let before = allocate_prbs(total, &build(0.0)).counts[which];
            let after = allocate_prbs(total, &build(extra)).counts[which];
            prop_assert!(after >= before);
        }
    }
}
