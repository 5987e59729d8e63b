use toneleak::classifier::{
    select_axes, validation_split, AxisFeatures, GbtHyperparams,
};
use toneleak::features::WindowingParams;
use toneleak::harness::{run_pipeline, VALIDATION_FRACTION};
use toneleak::sampling::SamplingConfig;
use toneleak::sensor_sim::{generate_dataset, Axis, AxisResponse, Dataset, SensorModel};

const ROW_BAND: [(f64, f64); 6] = [
    (0.0, 0.0),
    (650.0, 0.0),
    (680.0, 1.0),
    (960.0, 1.0),
    (990.0, 0.0),
    (5000.0, 0.0),
];
const COL_BAND: [(f64, f64); 6] = [
    (0.0, 0.0),
    (1150.0, 0.0),
    (1180.0, 1.0),
    (1650.0, 1.0),
    (1680.0, 0.0),
    (5000.0, 0.0),
];

fn model(axes: Vec<AxisResponse>) -> SensorModel {
    SensorModel::new(
        "test",
        axes,
        [0.05; 6],
        Vec::new(),
        SamplingConfig::new(400.0).unwrap(),
        0,
    )
    .unwrap()
}

fn hp() -> GbtHyperparams {
    GbtHyperparams {
        n_rounds: 15,
        ..Default::default()
    }
}

fn windowing() -> WindowingParams {
    WindowingParams::default()
}

fn dataset(m: &SensorModel, reps: usize) -> Dataset {
    generate_dataset(m, reps, 0.25, 17).unwrap()
}

fn selection_on(ds: &Dataset) -> toneleak::classifier::AxisSelection {
    let feats = AxisFeatures::from_recordings(&ds.recordings, &windowing()).unwrap();
    let (fit, val) = validation_split(feats.labels(), &ds.train, VALIDATION_FRACTION, 3);
    let sel = select_axes(&feats, &fit, &val, &hp()).unwrap();
    assert_eq!(sel.candidates.len(), 11);
    assert!(sel.val_accuracy >= sel.best_single_accuracy());
    for h in &sel.loss_histories {
        assert!(h.windows(2).all(|w| w[1] <= w[0]), "loss increased: {h:?}");
    }
    sel
}

#[test]
fn single_informative_axis_is_selected() {
    let mut axes = vec![AxisResponse::flat(0.0); 6];
    axes[Axis::Ax.index()] = AxisResponse::flat(1.0);
    let sel = selection_on(&dataset(&model(axes), 20));
    assert!(sel.axes.contains(&Axis::Ax), "{:?}", sel.axes);
    assert_eq!(sel.ranking[0], Axis::Ax);
    assert!(sel.val_accuracy >= sel.candidates[Axis::Ax.index()].val_accuracy);
}

#[test]
fn complementary_axes_are_combined() {
    let mut axes = vec![AxisResponse::flat(0.0); 6];
    axes[Axis::Ax.index()] = AxisResponse::new(ROW_BAND.to_vec(), vec![]).unwrap();
    axes[Axis::Ay.index()] = AxisResponse::new(COL_BAND.to_vec(), vec![]).unwrap();
    let sel = selection_on(&dataset(&model(axes), 20));
    assert!(sel.axes.contains(&Axis::Ax) && sel.axes.contains(&Axis::Ay), "{:?}", sel.axes);
    let ax = sel.candidates[Axis::Ax.index()].val_accuracy;
    let ay = sel.candidates[Axis::Ay.index()].val_accuracy;
    assert!(sel.val_accuracy > ax && sel.val_accuracy > ay, "{} vs {ax}/{ay}", sel.val_accuracy);
}

#[test]
fn pure_noise_is_chance_level() {
    let ds = dataset(&model(vec![AxisResponse::flat(0.0); 6]), 20);
    let o = run_pipeline(&ds, &windowing(), &hp()).unwrap();
    // 64 test rows at p = 1/16: mean 4, sd ≈ 1.9; 13 hits would be > 4.5 sd.
    assert!(o.report.accuracy < 13.0 / 64.0, "{}", o.report.accuracy);
    assert!(o.report.confusion.iter().all(|r| r.iter().sum::<usize>() == 4));
}

#[test]
fn identical_across_thread_counts() {
    let ds = dataset(&toneleak::sensor_sim::make_default_model(toneleak::sensor_sim::Preset::Resonant, 1).unwrap(), 10);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_pipeline(&ds, &windowing(), &hp()).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one, three);
    assert!(one.trained.loss_histories().all(|h| h.windows(2).all(|w| w[1] <= w[0])));
}
