use super::{AxonMapParams, AxonPathSet, ElectrodeArray};

/// Electrode-to-segment falloff `exp(-d_e^2 / 2 rho^2)` for every pair.
///
/// Logically indexed `[segment][electrode]`; stored electrode-major so a
/// frame can accumulate one contiguous column per active electrode.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    segments: usize,
    electrodes: usize,
    by_electrode: Vec<f64>,
}

impl KernelMatrix {
    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn electrodes(&self) -> usize {
        self.electrodes
    }

    pub fn get(&self, segment: usize, electrode: usize) -> f64 {
        self.by_electrode[electrode * self.segments + segment]
    }

    /// Falloff from one electrode to every segment.
    pub fn electrode_column(&self, electrode: usize) -> &[f64] {
        &self.by_electrode[electrode * self.segments..(electrode + 1) * self.segments]
    }
}

pub fn build_kernel(
    array: &ElectrodeArray,
    paths: &AxonPathSet,
    params: &AxonMapParams,
) -> KernelMatrix {
    let two_rho_sq = 2.0 * params.rho * params.rho;
    let segs = paths.segments();
    let by_electrode = array
        .positions()
        .iter()
        .flat_map(|e| {
            segs.iter()
                .map(move |p| (-p.dist_sq(*e) / two_rho_sq).exp())
        })
        .collect();
    KernelMatrix {
        segments: segs.len(),
        electrodes: array.len(),
        by_electrode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retina::{generate_axon_paths, AxonMode, RetinalPoint, VisualFieldGrid};

    fn one_segment_at(p: RetinalPoint) -> (ElectrodeArray, AxonPathSet, AxonMapParams) {
        // A 1x1 grid whose single pixel sits at the origin; the electrode moves.
        let grid = VisualFieldGrid::new(1, 1, 1.0, 280.0).unwrap();
        let params = AxonMapParams::default();
        let paths = generate_axon_paths(&grid, &params, AxonMode::Point).unwrap();
        let array = ElectrodeArray::new(1, 1, 400.0, p).unwrap();
        (array, paths, params)
    }

    #[test]
    fn coincident_is_one() {
        let (a, p, params) = one_segment_at(RetinalPoint::ORIGIN);
        assert_eq!(build_kernel(&a, &p, &params).get(0, 0), 1.0);
    }

    #[test]
    fn one_and_three_rho() {
        let (a, p, params) = one_segment_at(RetinalPoint::new(200.0, 0.0));
        assert!((build_kernel(&a, &p, &params).get(0, 0) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((build_kernel(&a, &p, &params).get(0, 0) - 0.6065).abs() < 1e-4);
        let (a, p, params) = one_segment_at(RetinalPoint::new(0.0, -600.0));
        let k = build_kernel(&a, &p, &params).get(0, 0);
        assert!((k - (-4.5f64).exp()).abs() < 1e-12);
        assert!((k - 0.0111).abs() < 1e-4);
    }

    #[test]
    fn entries_in_unit_interval() {
        let grid = VisualFieldGrid::new(8, 8, 14.6, 280.0).unwrap();
        let params = AxonMapParams::default();
        let paths = generate_axon_paths(&grid, &params, AxonMode::Spiral).unwrap();
        let array = ElectrodeArray::new(3, 3, 400.0, RetinalPoint::ORIGIN).unwrap();
        let k = build_kernel(&array, &paths, &params);
        assert_eq!(k.segments(), paths.segments().len());
        for s in 0..k.segments() {
            for e in 0..k.electrodes() {
                let v = k.get(s, e);
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
