//! Golden outputs for every text format the crate writes.

use dlgn::checkpoint::{Checkpoint, MAGIC, VERSION};
use dlgn::circuit::{export_netlist, CircuitNode, DiscreteCircuit, Ref};
use dlgn::config::RunConfig;
use dlgn::gates::GateId;
use dlgn::network::{build_network, EncoderConfig, NetworkConfig};
use dlgn::train::{histogram_csv, AdamState, EvalPoint, RunMetrics};

#[test]
fn netlist_golden() {
    let c = DiscreteCircuit::new(
        2,
        vec![
            CircuitNode {
                gate: GateId::XOR,
                a: Ref::Input(0),
                b: Ref::Input(1),
            },
            CircuitNode {
                gate: GateId::NAND,
                a: Ref::Node(0),
                b: Ref::Input(1),
            },
        ],
        vec![Ref::Node(0), Ref::Input(1), Ref::Node(1), Ref::Node(0)],
        2,
    )
    .unwrap();
    let expected = "\
dlgn-netlist v1 inputs=2 classes=2
in 0
in 1
node 0 XOR in:0 in:1
node 1 NAND n:0 in:1
bin 0 n:0 in:1
bin 1 n:1 n:0
";
    assert_eq!(export_netlist(&c), expected);
}

#[test]
fn metrics_golden() {
    let metrics = RunMetrics {
        layers: 2,
        points: vec![
            EvalPoint {
                step: 0,
                loss: 0.5,
                train_accuracy: 0.75,
                test_accuracy: None,
                train_discrete_accuracy: 0.5,
                test_discrete_accuracy: None,
                grad_norms: vec![0.125, 0.0625],
            },
            EvalPoint {
                step: 10,
                loss: 0.25,
                train_accuracy: 1.0,
                test_accuracy: Some(0.5),
                train_discrete_accuracy: 1.0,
                test_discrete_accuracy: Some(0.25),
                grad_norms: vec![1e-20, 3.0],
            },
        ],
    };
    let expected = "\
step,loss,train_acc,test_acc,train_disc_acc,test_disc_acc,gn_1,gn_2
0,0.5,0.75,,0.5,,1.25e-1,6.25e-2
10,0.25,1,0.5,1,0.25,1e-20,3e0
";
    assert_eq!(metrics.to_csv(), expected);
}

#[test]
fn histogram_golden() {
    let csv = histogram_csv(&[(1, vec![3, 0, 1, 0]), (2, vec![0, 0, 0, 4])]);
    let expected = "\
layer,bin_lo,bin_hi,count
1,0,0.25,3
1,0.25,0.5,0
1,0.5,0.75,1
1,0.75,1,0
2,0,0.25,0
2,0.25,0.5,0
2,0.5,0.75,0
2,0.75,1,4
";
    assert_eq!(csv, expected);
}

#[test]
fn config_echo_golden() {
    let expected = "\
dataset = parity:4
holdout = true
out = out
seed = 0
thresholds = 1
layer_width = 256
base_layers = 4
depth_scale = 1
final_width_multiplier = 1
classes = auto
tau = 10
parametrization = iwp
estimator = sin01
init = residual
init_targets =
init_sigma = default
init_mu = default
op_bias = 5
op_jitter = 0
residual_fraction = none
learning_rate = 0.01
steps = 5000
batch_size = 100
accumulation = 1
beta1 = 0.9
beta2 = 0.999
epsilon = 0.00000001
weight_decay = 0
eval_every = 1000
p_intervene = 0
intervention = bernoulli_half
p_dropout = 0
";
    assert_eq!(RunConfig::default().to_text(), expected);
    assert_eq!(RunConfig::parse(expected).unwrap(), RunConfig::default());
}

#[test]
fn checkpoint_layout() {
    let cfg = NetworkConfig::new(EncoderConfig::new(1, 2).unwrap(), 3, 1, 1);
    let network = build_network(&cfg, 0).unwrap();
    let adam = AdamState::new(&network);
    let ck = Checkpoint {
        config_text: "ab".into(),
        seed: 7,
        step: 9,
        network,
        adam,
    };
    let b = ck.to_bytes().unwrap();
    assert_eq!(&b[..8], MAGIC);
    assert_eq!(b[8..12], VERSION.to_le_bytes());
    assert_eq!(b[12..16], 2u32.to_le_bytes());
    assert_eq!(&b[16..18], b"ab");
    assert_eq!(b[18..26], 7u64.to_le_bytes());
    assert_eq!(b[26..34], 9u64.to_le_bytes());
    // iwp, sin01
    assert_eq!(&b[34..36], &[1, 1]);
    // 60-byte header; one layer of 3 neurons: 8 + 24 wiring + 3 flags + 96 params;
    // then adam t and two 96-byte moment blocks
    assert_eq!(b.len(), 60 + 8 + 24 + 3 + 96 + 8 + 192);
}
