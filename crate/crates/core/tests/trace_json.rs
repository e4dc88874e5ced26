use proptest::prelude::*;

use qrepeater::noise::{output_state, MemoryModel};
use qrepeater::protocol::{self, PatchMode, Protocol, SamplerParams};
use qrepeater::trace::OperationTrace;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn protocol_traces_survive_json(
        mb in any::<bool>(),
        levels in 1u32..5,
        p_gen in 0.2f64..1.0,
        p in 0.2f64..1.0,
        index in 0u64..1000,
    ) {
        let protocol = if mb { Protocol::Mb } else { Protocol::Sb };
        let params = SamplerParams::with_mode(p_gen, p, 2, PatchMode::Limited).unwrap();
        let o = protocol::sample(protocol, 1 << levels, &params, 1, index).unwrap();
        let back = OperationTrace::from_json(&o.trace.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &o.trace);

        let memory = MemoryModel::new(1.0, 1e-3).unwrap();
        let a = output_state(&o.trace, &o.ledger, &memory).unwrap();
        let b = output_state(&back, &o.ledger, &memory).unwrap();
        prop_assert_eq!(a.probs(), b.probs());
    }
}

#[test]
fn malformed_traces_are_rejected() {
    assert!(OperationTrace::from_json("{}").is_err());
    assert!(OperationTrace::from_json("[]").is_err());
}
