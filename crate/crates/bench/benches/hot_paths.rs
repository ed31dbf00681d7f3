use criterion::{black_box, criterion_group, criterion_main, Criterion};
use odt_core::drivebus::{crc16_modbus, decode_frame, encode_frame};
use odt_core::kinematics::{forward_ovf, inverse_kinematics, RigConfig, VelocityCommand};
use odt_sim::presets::{preset_scenarios, Preset};

fn bench_kinematics(c: &mut Criterion) {
    let cfg = RigConfig::default();
    c.bench_function("ik_round_trip", |b| {
        b.iter(|| {
            let cmd = VelocityCommand::new(black_box(0.7), black_box(1.2));
            let speeds = inverse_kinematics(&cmd, &cfg).unwrap();
            forward_ovf(&speeds, &cfg).unwrap()
        })
    });
}

fn bench_crc(c: &mut Criterion) {
    let frame = encode_frame(0x01, 0x03, &[0x00, 0x10, 0x00, 0x02]);
    c.bench_function("crc16_modbus", |b| b.iter(|| crc16_modbus(black_box(&frame))));
    c.bench_function("decode_frame", |b| b.iter(|| decode_frame(black_box(&frame)).unwrap()));
}

fn bench_engine(c: &mut Criterion) {
    let scenario = preset_scenarios(Preset::StartStopX).remove(0).1;
    c.bench_function("startstop_run", |b| b.iter(|| odt_core::run(black_box(&scenario)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_kinematics, bench_crc, bench_engine
}
criterion_main!(benches);
