use super::{FrameError, GrayImage, LabeledFrame};

/// Side length of processed frames.
pub const PROCESSED_SIZE: usize = 200;

/// Downscales to `PROCESSED_SIZE` square, then smooths intensity with a 3x3
/// binomial Gaussian. Intensity is area-averaged; labels are taken from the
/// source pixel under each output pixel center so they never blend.
pub fn downscale_gray_smooth(frame: &LabeledFrame) -> Result<LabeledFrame, FrameError> {
    frame.validate()?;
    let size = PROCESSED_SIZE;
    if frame.width < size || frame.height < size {
        return Err(FrameError::Undersized {
            width: frame.width,
            height: frame.height,
            min: size,
        });
    }
    if frame.width == size && frame.height == size {
        let img = GrayImage {
            width: size,
            height: size,
            data: frame.intensity.clone(),
        };
        return Ok(LabeledFrame {
            intensity: gaussian_smooth_3x3(&img).data,
            ..frame.clone()
        });
    }
    let cols = area_weights(frame.width, size);
    let rows = area_weights(frame.height, size);

    // Horizontal pass into a size x height buffer, then vertical.
    let mut tmp = vec![0.0; size * frame.height];
    for r in 0..frame.height {
        let src = &frame.intensity[r * frame.width..(r + 1) * frame.width];
        for (oc, w) in cols.iter().enumerate() {
            tmp[r * size + oc] = w.iter().map(|&(c, wt)| src[c] * wt).sum();
        }
    }
    let mut out = GrayImage::new(size, size);
    for (or, w) in rows.iter().enumerate() {
        for oc in 0..size {
            out.data[or * size + oc] = w.iter().map(|&(r, wt)| tmp[r * size + oc] * wt).sum();
        }
    }

    let labels = (0..size * size)
        .map(|i| {
            let (oc, or) = (i % size, i / size);
            let sc = nearest_source(oc, size, frame.width);
            let sr = nearest_source(or, size, frame.height);
            frame.labels[sr * frame.width + sc]
        })
        .collect();

    Ok(LabeledFrame {
        width: size,
        height: size,
        intensity: gaussian_smooth_3x3(&out).data,
        labels,
        hfov_deg: frame.hfov_deg,
    })
}

fn nearest_source(out_index: usize, out_len: usize, src_len: usize) -> usize {
    (((out_index as f64 + 0.5) * src_len as f64 / out_len as f64).floor() as usize).min(src_len - 1)
}

/// For each output cell, the overlapping source cells and their area fraction.
fn area_weights(src_len: usize, out_len: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let (lo, hi) = (o as f64 * scale, (o + 1) as f64 * scale);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src_len);
            (first..last)
                .filter_map(|s| {
                    let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// 3x3 Gaussian, kernel `[1,2,1] x [1,2,1] / 16`, edges replicated.
pub fn gaussian_smooth_3x3(img: &GrayImage) -> GrayImage {
    separable(img, &[0.25, 0.5, 0.25], &[0.25, 0.5, 0.25])
}

/// Correlates with `horizontal` along rows and `vertical` along columns.
fn separable(img: &GrayImage, horizontal: &[f64], vertical: &[f64]) -> GrayImage {
    let (w, h) = (img.width, img.height);
    let mut tmp = vec![0.0; w * h];
    let mut line = Vec::new();
    for r in 0..h {
        correlate_line(
            horizontal,
            &img.data[r * w..(r + 1) * w],
            &mut line,
            &mut tmp[r * w..(r + 1) * w],
        );
    }
    let mut out = GrayImage::new(w, h);
    let mut column = vec![0.0; h];
    let mut result = vec![0.0; h];
    for c in 0..w {
        for (r, v) in column.iter_mut().enumerate() {
            *v = tmp[r * w + c];
        }
        correlate_line(vertical, &column, &mut line, &mut result);
        for (r, v) in result.iter().enumerate() {
            out.data[r * w + c] = *v;
        }
    }
    out
}

/// Correlates one line with `kernel`, replicating the end samples.
/// Antisymmetric kernels are evaluated as weighted differences so flat
/// input gives exactly 0.
fn correlate_line(kernel: &[f64], src: &[f64], padded: &mut Vec<f64>, out: &mut [f64]) {
    let r = kernel.len() / 2;
    let (first, last) = (src[0], src[src.len() - 1]);
    padded.clear();
    padded.extend(std::iter::repeat_n(first, r));
    padded.extend_from_slice(src);
    padded.extend(std::iter::repeat_n(last, r));
    let antisymmetric = (0..kernel.len()).all(|i| kernel[i] == -kernel[kernel.len() - 1 - i]);
    for (i, o) in out.iter_mut().enumerate() {
        let window = &padded[i..i + kernel.len()];
        *o = if antisymmetric {
            (1..=r)
                .map(|k| kernel[r + k] * (window[r + k] - window[r - k]))
                .sum()
        } else {
            kernel.iter().zip(window).map(|(k, v)| k * v).sum()
        };
    }
}

/// `(smoothing, derivative)` vectors of the supported Sobel sizes.
fn sobel_vectors(kernel_size: usize) -> Result<(&'static [f64], &'static [f64]), FrameError> {
    match kernel_size {
        3 => Ok((&[1.0, 2.0, 1.0], &[-1.0, 0.0, 1.0])),
        7 => Ok((
            &[1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0],
            &[-1.0, -4.0, -5.0, 0.0, 5.0, 4.0, 1.0],
        )),
        other => Err(FrameError::UnsupportedKernel(other)),
    }
}

/// Sobel gradient magnitude, scaled so a unit step edge peaks at 1 and
/// clamped to [0, 1]. Borders replicate the edge pixel.
pub fn sobel_magnitude(img: &GrayImage, kernel_size: usize) -> Result<GrayImage, FrameError> {
    let (smooth, deriv) = sobel_vectors(kernel_size)?;
    let step_response: f64 =
        smooth.iter().sum::<f64>() * deriv.iter().filter(|v| **v > 0.0).sum::<f64>();
    let gx = separable(img, deriv, smooth);
    let gy = separable(img, smooth, deriv);
    let data = gx
        .data
        .iter()
        .zip(&gy.data)
        .map(|(x, y)| (x.hypot(*y) / step_response).min(1.0))
        .collect();
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        data,
    })
}
