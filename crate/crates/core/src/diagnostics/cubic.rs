use crate::geometry::{AxisymBody, ConvexBody};

/// `|C|²` of the cubic form
/// `C_ijk = ½K^{-1/4}∇_k h_ij + ½(h_jk∇_i + h_ki∇_j + h_ij∇_k)K^{-1/4}`
/// at each sample of a body of revolution.
///
/// In the principal frame (e1 meridional, e2 azimuthal) the only non-zero
/// derivatives of the second fundamental form are `∇_1h_11 = ∂_sκ1` and
/// `∇_1h_22 = ∇_2h_12 = ∂_sκ2`; the frame is parallel along meridians so no
/// further connection terms appear. Hence `C_112 = C_222 = 0` and
/// `|C|² = C_111² + 3C_122²`.
pub fn cubic_form_norm(body: &AxisymBody) -> Vec<f64> {
    let fields = body.curvature_fields();
    let (r1, r2) = (&fields.radii[0], &fields.radii[1]);
    let k1: Vec<f64> = r1.iter().map(|r| 1.0 / r).collect();
    let k2: Vec<f64> = r2.iter().map(|r| 1.0 / r).collect();
    let weight: Vec<f64> = fields.gauss.iter().map(|k| k.powf(-0.25)).collect();

    let dk1 = body.grid_derivative(&k1);
    let dk2 = body.grid_derivative(&k2);
    let dw = body.grid_derivative(&weight);

    (0..body.len())
        .map(|j| {
            let c111 = (0.5 * weight[j] * dk1[j] + 1.5 * k1[j] * dw[j]) / r1[j];
            let c122 = (0.5 * weight[j] * dk2[j] + 0.5 * k2[j] * dw[j]) / r1[j];
            c111 * c111 + 3.0 * c122 * c122
        })
        .collect()
}
