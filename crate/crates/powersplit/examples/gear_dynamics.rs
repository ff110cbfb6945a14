//! Exact mode dynamics of a single-planetary power split: assemble the
//! free system, reduce it under a few connection sets, and print each
//! characteristic matrix with its speed relations — all in exact fractions.
//!
//! ```bash
//! cargo run --example gear_dynamics
//! ```

use powersplit::dynamics::{
    assemble_full_dynamics, reduce_with_connections, speed_map, CharacteristicMatrix,
    KinematicRelation,
};
use powersplit::planetary::{
    Configuration, Connection, GearTrain, Inertias, Node, NodeRole, Placement,
};
use powersplit::rational::{frac, frac_int, frac_str};

fn print_matrix(label: &str, a: &CharacteristicMatrix) {
    println!("{label}: dof = {}", a.dof());
    let rows = ["out", "eng", "mg1", "mg2"];
    println!("            T_load      T_eng      T_mg1      T_mg2");
    for (i, name) in rows.iter().enumerate() {
        let cells: Vec<String> = (0..4)
            .map(|j| format!("{:>10}", frac_str(a.entry(i, j))))
            .collect();
        println!("  {name:>4} {}", cells.join(" "));
    }
}

fn main() {
    // Engine on the carrier, MG1 on the sun, MG2 and the output sharing
    // the ring; sun:ring = 1:2.
    let config = Configuration {
        train: GearTrain::uniform(1, frac_int(2)).unwrap(),
        placement: Placement {
            engine: Node::new(0, NodeRole::Carrier),
            mg1: Node::new(0, NodeRole::Sun),
            mg2: Node::new(0, NodeRole::Ring),
            output: Node::new(0, NodeRole::Ring),
        },
        permanent: vec![],
    };
    let inertias = Inertias::new(
        frac(11, 50), // engine
        frac(1, 20),  // MG1
        frac(1, 20),  // MG2
        frac_int(36), // vehicle, reflected
        frac(1, 1000),
        3,
    );
    let model = assemble_full_dynamics(&config, &inertias).unwrap();
    println!(
        "lever constraint coefficients (sun, carrier, ring): [{}, {}, {}]\n",
        frac_str(&model.constraints[0].coeffs[0]),
        frac_str(&model.constraints[0].coeffs[1]),
        frac_str(&model.constraints[0].coeffs[2]),
    );

    let open = reduce_with_connections(&model, &[]).unwrap();
    print_matrix("no clutches (split drive)", &open);
    match speed_map(&open).unwrap() {
        KinematicRelation::TwoDof {
            out_coeff,
            basis_coeff,
            ..
        } => {
            println!(
                "  MG1 speed = {}*w_out + {}*w_eng\n",
                frac_str(&out_coeff[2]),
                frac_str(&basis_coeff[2])
            );
        }
        _ => unreachable!(),
    }

    let locked = reduce_with_connections(
        &model,
        &[Connection::pair(
            Node::new(0, NodeRole::Sun),
            Node::new(0, NodeRole::Ring),
        )],
    )
    .unwrap();
    print_matrix("sun-ring lock (direct drive)", &locked);
    if let KinematicRelation::SingleDof { ratios } = speed_map(&locked).unwrap() {
        println!("  engine:output ratio = {}\n", frac_str(&ratios[1]));
    }

    let braked = reduce_with_connections(
        &model,
        &[Connection::Ground(Node::new(0, NodeRole::Carrier))],
    )
    .unwrap();
    print_matrix("carrier brake (engine held, pure EV)", &braked);
}
