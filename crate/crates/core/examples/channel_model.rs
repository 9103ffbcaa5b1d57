//! Builds a two-path channel, checks that the Kronecker-form channel vector
//! is the column-stacked channel matrix, and prints the Jacobian layout.

use crb_waveform::channel::{
    channel_derivatives, channel_matrix, channel_vector, ArrayGeometry, MultipathParams, OfdmNumerology, ParamKind,
    PathParams, ResourceElement,
};
use crb_waveform::scenario::{delay_from_length, doppler_from_velocity};

fn main() -> crb_waveform::Result<()> {
    let num = OfdmNumerology::new(15e3, 3e9)?;
    let geom = ArrayGeometry::new(4, 4)?;
    let paths: [(f64, f64, f64, f64, f64, f64); 2] = [(0.8, -0.3, 120.0, 20.0, 25.0, -10.0), (-0.2, 0.5, 460.0, 55.0, -40.0, 30.0)];
    let params = MultipathParams::new(
        paths
            .iter()
            .map(|&(re, im, length, speed, aoa, aod)| PathParams {
                gain_re: re,
                gain_im: im,
                delay: delay_from_length(length),
                doppler: doppler_from_velocity(speed, num.carrier_frequency()),
                aoa: aoa.to_radians(),
                aod: aod.to_radians(),
            })
            .collect(),
    )?;

    let re = ResourceElement::new(3, 1);
    let h = channel_matrix(&params, re, &num, &geom);
    let v = channel_vector(&params, re, &num, &geom);
    let vec_h = h.reshape_generic(nalgebra::Dyn(16), nalgebra::Const::<1>);
    println!("max |vec(H) - h| = {:.2e}", (vec_h - &v).camax());

    let jac = channel_derivatives(&params, re, &num, &geom);
    println!("Jacobian {} x {}", jac.nrows(), jac.ncols());
    for kind in ParamKind::ALL {
        for l in 0..params.num_paths() {
            let col = params.index(kind, l);
            println!("  column {col:2}: {:8} path {l}  |dh| = {:.4e}", kind.name(), jac.column(col).norm());
        }
    }
    Ok(())
}
