//! Constellations, labelings and channel parameters.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Tolerance on the average power of a constellation handed to the
/// evaluators.
pub const UNIT_POWER_TOLERANCE: f64 = 1e-9;

/// Relative tolerance used when detecting nearest-neighbour ties.
const TIE_TOLERANCE: f64 = 1e-9;

/// A set of `M = 2^m` complex points with a one-to-one `m`-bit labeling.
///
/// `labels[i]` is the label of `points[i]`. Constellations are value
/// objects: every transformation returns a new one.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    labels: Vec<u32>,
    bits: u32,
}

impl Constellation {
    /// Validates points and labels. The result is not normalized.
    pub fn new(points: Vec<Complex64>, labels: Vec<u32>) -> Result<Self> {
        let size = points.len();
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::SizeNotPowerOfTwo(size));
        }
        if labels.len() != size {
            return Err(Error::LengthMismatch { points: size, labels: labels.len() });
        }
        let mut seen = alloc::vec![false; size];
        for &label in &labels {
            let slot = seen.get_mut(label as usize).ok_or(Error::DuplicateLabel(label))?;
            if *slot {
                return Err(Error::DuplicateLabel(label));
            }
            *slot = true;
        }
        for (i, p) in points.iter().enumerate() {
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(Error::NonFinitePoint(i));
            }
        }
        for i in 0..size {
            for j in i + 1..size {
                if points[i] == points[j] {
                    return Err(Error::DuplicatePoint(i, j));
                }
            }
        }
        Ok(Self { points, labels, bits: size.trailing_zeros() })
    }

    /// Points with labels `0..M` in order.
    pub fn with_natural_labels(points: Vec<Complex64>) -> Result<Self> {
        let labels = (0..points.len() as u32).collect();
        Self::new(points, labels)
    }

    pub(crate) fn from_parts_unchecked(points: Vec<Complex64>, labels: Vec<u32>) -> Self {
        let bits = points.len().trailing_zeros();
        Self { points, labels, bits }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bits per symbol, `m = log2 M`.
    pub fn bits_per_symbol(&self) -> u32 {
        self.bits
    }

    pub fn into_parts(self) -> (Vec<Complex64>, Vec<u32>) {
        (self.points, self.labels)
    }

    pub fn average_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    pub fn is_unit_power(&self) -> bool {
        libm::fabs(self.average_power() - 1.0) <= UNIT_POWER_TOLERANCE
    }

    /// Bit `bit` (0 = least significant) of the label of point `index`.
    #[inline]
    pub fn label_bit(&self, index: usize, bit: u32) -> bool {
        (self.labels[index] >> bit) & 1 == 1
    }

    pub fn label_bits(&self, index: usize) -> LabelBits {
        LabelBits { value: self.labels[index], width: self.bits }
    }

    /// Scales every point so the average power is exactly one.
    pub fn normalized(&self) -> Result<Self> {
        let power = self.average_power();
        if power == 0.0 {
            return Err(Error::AllZero);
        }
        let scale = 1.0 / libm::sqrt(power);
        let points = self.points.iter().map(|p| p * scale).collect();
        Ok(Self::from_parts_unchecked(points, self.labels.clone()))
    }

    /// Rotates every point by `theta` radians.
    pub fn rotated(&self, theta: f64) -> Self {
        let rotor = Complex64::from_polar(1.0, theta);
        let points = self.points.iter().map(|p| p * rotor).collect();
        Self::from_parts_unchecked(points, self.labels.clone())
    }

    /// Multiplies every point by a positive real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        let points = self.points.iter().map(|p| p * factor).collect();
        Self::from_parts_unchecked(points, self.labels.clone())
    }

    /// Smallest distance between two distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.min((self.points[i] - self.points[j]).norm_sqr());
            }
        }
        libm::sqrt(best)
    }

    /// Short hex digest of the points (bit patterns) and labels.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.points {
            hasher.update(p.re.to_le_bytes());
            hasher.update(p.im.to_le_bytes());
        }
        for l in &self.labels {
            hasher.update(l.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Validates points and labels into a [`Constellation`].
pub fn make_constellation(points: Vec<Complex64>, labels: Vec<u32>) -> Result<Constellation> {
    Constellation::new(points, labels)
}

/// Rescales the points to unit average power; labels are unchanged.
pub fn normalize_average_power(c: &Constellation) -> Result<Constellation> {
    c.normalized()
}

/// An `m`-bit label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabelBits {
    value: u32,
    width: u32,
}

impl LabelBits {
    pub fn new(value: u32, width: u32) -> Result<Self> {
        if width < 32 && value >> width != 0 {
            return Err(Error::LabelOutOfRange { value, width });
        }
        Ok(Self { value, width })
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn width(self) -> u32 {
        self.width
    }
}

pub fn hamming_distance(a: LabelBits, b: LabelBits) -> Result<u32> {
    if a.width != b.width {
        return Err(Error::WidthMismatch(a.width, b.width));
    }
    Ok((a.value ^ b.value).count_ones())
}

/// Checks that every nearest neighbour of every point carries a label at
/// Hamming distance one. All tied nearest neighbours must satisfy it.
pub fn is_gray(c: &Constellation) -> bool {
    let n = c.len();
    let points = c.points();
    for i in 0..n {
        let nearest = (0..n)
            .filter(|&k| k != i)
            .map(|k| (points[i] - points[k]).norm_sqr())
            .fold(f64::INFINITY, f64::min);
        let limit = nearest * (1.0 + TIE_TOLERANCE);
        for j in (0..n).filter(|&j| j != i) {
            if (points[i] - points[j]).norm_sqr() <= limit
                && (c.labels()[i] ^ c.labels()[j]).count_ones() != 1
            {
                return false;
            }
        }
    }
    true
}

/// Binary-reflected Gray code.
#[inline]
pub fn gray_code(n: u32) -> u32 {
    n ^ (n >> 1)
}

/// Thermal and phase noise concentrations.
///
/// `k_n = 1/sigma^2` where `sigma^2` is the per-dimension noise variance, so
/// with unit average power `SNR = k_n / 2`. `k_phi` is the Tikhonov
/// concentration; `+inf` means no phase noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    k_n: f64,
    k_phi: f64,
}

impl ChannelParams {
    pub fn from_concentrations(k_n: f64, k_phi: f64) -> Result<Self> {
        if !(k_n > 0.0) || !k_n.is_finite() {
            return Err(Error::InvalidChannel("thermal concentration must be positive and finite"));
        }
        if !(k_phi > 0.0) {
            return Err(Error::InvalidChannel("phase concentration must be positive"));
        }
        Ok(Self { k_n, k_phi })
    }

    /// SNR in dB and phase-noise standard deviation in degrees
    /// (`0` = no phase noise).
    pub fn from_snr_pnsd(snr_db: f64, pnsd_deg: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::InvalidChannel("SNR must be finite"));
        }
        if !(pnsd_deg >= 0.0) || !pnsd_deg.is_finite() {
            return Err(Error::InvalidChannel("PNSD must be finite and non-negative"));
        }
        Self::from_concentrations(snr_db_to_k_n(snr_db), pnsd_rad_to_k_phi(pnsd_deg.to_radians()))
    }

    /// Pure AWGN channel at the given SNR.
    pub fn awgn(snr_db: f64) -> Result<Self> {
        Self::from_snr_pnsd(snr_db, 0.0)
    }

    pub fn k_n(&self) -> f64 {
        self.k_n
    }

    pub fn k_phi(&self) -> f64 {
        self.k_phi
    }

    pub fn has_phase_noise(&self) -> bool {
        self.k_phi.is_finite()
    }

    /// `A = k_n / k_phi`, zero without phase noise.
    pub fn a_ratio(&self) -> f64 {
        if self.has_phase_noise() {
            self.k_n / self.k_phi
        } else {
            0.0
        }
    }

    /// Per-dimension noise standard deviation `1/sqrt(k_n)`.
    pub fn sigma(&self) -> f64 {
        1.0 / libm::sqrt(self.k_n)
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * libm::log10(self.k_n / 2.0)
    }

    pub fn pnsd_rad(&self) -> f64 {
        if self.has_phase_noise() {
            libm::sqrt(1.0 / self.k_phi)
        } else {
            0.0
        }
    }

    pub fn pnsd_deg(&self) -> f64 {
        self.pnsd_rad().to_degrees()
    }

    /// Same phase noise, different SNR.
    pub fn with_snr_db(&self, snr_db: f64) -> Result<Self> {
        Self::from_concentrations(snr_db_to_k_n(snr_db), self.k_phi)
    }
}

pub fn snr_db_to_k_n(snr_db: f64) -> f64 {
    2.0 * libm::pow(10.0, snr_db / 10.0)
}

/// `1/sigma^2`, or `+inf` for `sigma = 0`.
pub fn pnsd_rad_to_k_phi(pnsd_rad: f64) -> f64 {
    if pnsd_rad == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (pnsd_rad * pnsd_rad)
    }
}

/// Conventional constellation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Psk,
    Qam,
    Apsk,
}

/// One APSK ring: number of points, radius and phase offset (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub points: usize,
    pub radius: f64,
    pub phase: f64,
}

/// Unit-power PSK, QAM or APSK with a Gray (or per-ring Gray) labeling.
///
/// QAM supports square sizes (even `m`) and the cross-shaped 32/128/512
/// layouts; cross layouts have no Gray labeling and are labeled along a
/// serpentine scan. APSK requires `rings`, each ring size a power of two.
pub fn reference_constellation(kind: ReferenceKind, size: usize, rings: Option<&[Ring]>) -> Result<Constellation> {
    if size < 2 || !size.is_power_of_two() {
        return Err(Error::SizeNotPowerOfTwo(size));
    }
    let c = match kind {
        ReferenceKind::Psk => psk(size, 0.0),
        ReferenceKind::Qam => qam(size)?,
        ReferenceKind::Apsk => apsk(size, rings.ok_or(Error::Unsupported("APSK needs a ring specification"))?)?,
    };
    c.normalized()
}

fn psk(size: usize, phase: f64) -> Constellation {
    let points = (0..size)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / size as f64 + phase))
        .collect();
    let labels = (0..size as u32).map(gray_code).collect();
    Constellation::from_parts_unchecked(points, labels)
}

fn qam(size: usize) -> Result<Constellation> {
    let bits = size.trailing_zeros();
    if size < 4 {
        return Err(Error::Unsupported("QAM needs at least 4 points"));
    }
    if bits.is_multiple_of(2) {
        let side = 1usize << (bits / 2);
        let half = bits / 2;
        let mut points = Vec::with_capacity(size);
        let mut labels = Vec::with_capacity(size);
        for a in 0..side {
            for b in 0..side {
                points.push(Complex64::new(
                    (2 * a) as f64 - (side - 1) as f64,
                    (2 * b) as f64 - (side - 1) as f64,
                ));
                labels.push((gray_code(a as u32) << half) | gray_code(b as u32));
            }
        }
        return Ok(Constellation::from_parts_unchecked(points, labels));
    }
    if size < 32 {
        return Err(Error::Unsupported("cross QAM needs at least 32 points"));
    }
    // cross: (3s x 3s) square minus four (s x s) corners, s = 2^((m-5)/2)
    let corner = 1usize << ((bits - 5) / 2);
    let side = 6 * corner;
    let mut points = Vec::with_capacity(size);
    for row in 0..side {
        let cols: Vec<usize> = if row % 2 == 0 {
            (0..side).collect()
        } else {
            (0..side).rev().collect()
        };
        for col in cols {
            let in_band = |v: usize| v >= corner && v < side - corner;
            if !in_band(row) && !in_band(col) {
                continue;
            }
            points.push(Complex64::new(
                (2 * col) as f64 - (side - 1) as f64,
                (2 * row) as f64 - (side - 1) as f64,
            ));
        }
    }
    debug_assert_eq!(points.len(), size);
    let labels = (0..size as u32).map(gray_code).collect();
    Ok(Constellation::from_parts_unchecked(points, labels))
}

fn apsk(size: usize, rings: &[Ring]) -> Result<Constellation> {
    if rings.is_empty() {
        return Err(Error::Unsupported("APSK needs at least one ring"));
    }
    if rings.iter().map(|r| r.points).sum::<usize>() != size {
        return Err(Error::Unsupported("APSK ring sizes must add up to the constellation size"));
    }
    if rings.iter().any(|r| r.points == 0 || !r.points.is_power_of_two() || !(r.radius > 0.0)) {
        return Err(Error::Unsupported("APSK rings need a power-of-two size and positive radius"));
    }
    // Larger rings first so every ring's label block is aligned to its size.
    let mut order: Vec<usize> = (0..rings.len()).collect();
    order.sort_by(|&a, &b| rings[b].points.cmp(&rings[a].points));
    let mut points = Vec::with_capacity(size);
    let mut labels = Vec::with_capacity(size);
    let mut offset = 0u32;
    for &r in &order {
        let ring = rings[r];
        for k in 0..ring.points {
            let angle = 2.0 * PI * k as f64 / ring.points as f64 + ring.phase;
            points.push(Complex64::from_polar(ring.radius, angle));
            labels.push(offset + gray_code(k as u32));
        }
        offset += ring.points as u32;
    }
    Constellation::new(points, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qpsk() -> Constellation {
        make_constellation(vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)], vec![0, 1, 3, 2]).unwrap()
    }

    #[test]
    fn builds_qpsk() {
        let q = qpsk();
        assert_eq!(q.bits_per_symbol(), 2);
        assert_eq!(q.len(), 4);
    }

    #[test]
    fn rejects_bad_sizes_and_labels() {
        let three = make_constellation(vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)], vec![0, 1, 2]);
        assert_eq!(three, Err(Error::SizeNotPowerOfTwo(3)));
        let dup = make_constellation(vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)], vec![0, 0, 1, 2]);
        assert_eq!(dup, Err(Error::DuplicateLabel(0)));
        let out = make_constellation(vec![c(1.0, 0.0), c(-1.0, 0.0)], vec![0, 2]);
        assert_eq!(out, Err(Error::DuplicateLabel(2)));
        let same = make_constellation(vec![c(1.0, 0.0), c(1.0, 0.0)], vec![0, 1]);
        assert_eq!(same, Err(Error::DuplicatePoint(0, 1)));
        let nan = make_constellation(vec![c(f64::NAN, 0.0), c(1.0, 0.0)], vec![0, 1]);
        assert_eq!(nan, Err(Error::NonFinitePoint(0)));
    }

    #[test]
    fn normalizes_power() {
        let pair = make_constellation(vec![c(2.0, 0.0), c(-2.0, 0.0)], vec![0, 1]).unwrap();
        let n = normalize_average_power(&pair).unwrap();
        assert_eq!(n.points(), &[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(n.labels(), pair.labels());

        let q = qpsk();
        assert_eq!(normalize_average_power(&q).unwrap(), q);

        let zeros = Constellation::from_parts_unchecked(vec![c(0.0, 0.0), c(0.0, 0.0)], vec![0, 1]);
        assert_eq!(normalize_average_power(&zeros), Err(Error::AllZero));
    }

    #[test]
    fn hamming_examples() {
        let l = |v| LabelBits::new(v, 3).unwrap();
        assert_eq!(hamming_distance(l(0b000), l(0b000)), Ok(0));
        assert_eq!(hamming_distance(l(0b000), l(0b111)), Ok(3));
        assert_eq!(hamming_distance(l(0b101), l(0b011)), Ok(2));
        let wide = LabelBits::new(1, 4).unwrap();
        assert_eq!(hamming_distance(l(1), wide), Err(Error::WidthMismatch(3, 4)));
        assert!(LabelBits::new(8, 3).is_err());
    }

    #[test]
    fn gray_checks() {
        let psk8 = reference_constellation(ReferenceKind::Psk, 8, None).unwrap();
        assert_eq!(psk8.labels(), &[0, 1, 3, 2, 6, 7, 5, 4]);
        assert!(is_gray(&psk8));

        let natural = Constellation::with_natural_labels(psk8.points().to_vec()).unwrap();
        assert!(!is_gray(&natural));

        let bpsk = make_constellation(vec![c(1.0, 0.0), c(-1.0, 0.0)], vec![1, 0]).unwrap();
        assert!(is_gray(&bpsk));
    }

    #[test]
    fn gray_requires_all_tied_neighbours() {
        // Square QPSK: each point has two nearest neighbours.
        let pts = vec![c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)];
        let good = make_constellation(pts.clone(), vec![0, 1, 3, 2]).unwrap();
        assert!(is_gray(&good));
        // 0 and 3 are adjacent here and differ in two bits.
        let bad = make_constellation(pts, vec![0, 1, 2, 3]).unwrap();
        assert!(!is_gray(&bad));
    }

    #[test]
    fn psk_references() {
        let psk8 = reference_constellation(ReferenceKind::Psk, 8, None).unwrap();
        for (i, p) in psk8.points().iter().enumerate() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
            let want = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 8.0);
            assert!((p - want).norm() < 1e-15);
        }
        let bpsk = reference_constellation(ReferenceKind::Psk, 2, None).unwrap();
        assert!((bpsk.points()[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((bpsk.points()[1] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn qam16_has_unit_power_and_gray_labels() {
        let q = reference_constellation(ReferenceKind::Qam, 16, None).unwrap();
        let power: f64 = q.points().iter().map(|p| p.re * p.re + p.im * p.im).sum::<f64>() / 16.0;
        assert!((power - 1.0).abs() < 1e-12);
        assert!(is_gray(&q));
        // 4x4 grid: scaled odd integers, scale 1/sqrt(10)
        let unit = 1.0 / 10f64.sqrt();
        for p in q.points() {
            for v in [p.re, p.im] {
                let k = v / unit;
                assert!((k - k.round()).abs() < 1e-12 && (k.round() as i64) % 2 != 0);
            }
        }
    }

    #[test]
    fn cross_qam_sizes() {
        for size in [32, 128] {
            let q = reference_constellation(ReferenceKind::Qam, size, None).unwrap();
            assert_eq!(q.len(), size);
            assert!(q.is_unit_power());
        }
        assert!(reference_constellation(ReferenceKind::Qam, 8, None).is_err());
        assert!(reference_constellation(ReferenceKind::Qam, 2, None).is_err());
    }

    #[test]
    fn apsk_reference() {
        let rings = [
            Ring { points: 4, radius: 1.0, phase: PI / 4.0 },
            Ring { points: 12, radius: 2.7, phase: 0.0 },
        ];
        // 12 is not a power of two
        assert!(reference_constellation(ReferenceKind::Apsk, 16, Some(&rings)).is_err());
        let rings = [
            Ring { points: 4, radius: 1.0, phase: PI / 4.0 },
            Ring { points: 4, radius: 2.5, phase: 0.0 },
        ];
        let a = reference_constellation(ReferenceKind::Apsk, 8, Some(&rings)).unwrap();
        assert!(a.is_unit_power());
        assert!(reference_constellation(ReferenceKind::Apsk, 8, None).is_err());
    }

    #[test]
    fn channel_conversions() {
        let p = ChannelParams::from_snr_pnsd(12.0, 5.0).unwrap();
        assert!((p.snr_db() - 12.0).abs() < 1e-12 * 12.0);
        assert!((p.pnsd_deg() - 5.0).abs() < 1e-12 * 5.0);
        assert_eq!(p.a_ratio() * p.k_phi(), p.k_n());
        let awgn = ChannelParams::awgn(3.0).unwrap();
        assert!(!awgn.has_phase_noise());
        assert_eq!(awgn.a_ratio(), 0.0);
        assert_eq!(awgn.pnsd_rad(), 0.0);
        assert!(ChannelParams::from_snr_pnsd(3.0, -1.0).is_err());
        assert!(ChannelParams::from_concentrations(0.0, 1.0).is_err());
        assert!(ChannelParams::from_concentrations(1.0, 0.0).is_err());
    }

    #[test]
    fn fingerprint_tracks_points_and_labels() {
        let q = qpsk();
        assert_eq!(q.fingerprint(), q.clone().fingerprint());
        assert_eq!(q.fingerprint().len(), 16);
        let (pts, mut labels) = q.clone().into_parts();
        labels.swap(0, 1);
        assert_ne!(make_constellation(pts, labels).unwrap().fingerprint(), q.fingerprint());
    }
}
