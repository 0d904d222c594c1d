import numpy as np
import pytest

from facegen.dataset import BuildConfig, build, load, split
from facegen.generator import ToyGenerator
from facegen.regressor import ArchitectureConfig, TrainConfig, init, train
from facegen.text_pipeline import HashedBagEmbedder


@pytest.fixture(scope="session")
def toy_generator():
    return ToyGenerator()


@pytest.fixture(scope="session")
def embedder():
    return HashedBagEmbedder()


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory, toy_generator):
    """120-record dataset shared by tests that need real records."""
    out = tmp_path_factory.mktemp("smallds")
    config = BuildConfig(n=120, latent_seed=5, descriptor_seed=9, out_dir=str(out))
    manifest = build(config, toy_generator)
    _, records = load(out)
    the_split = split(manifest, 0.75, seed=11, out_dir=out)
    return {"dir": out, "manifest": manifest, "records": records, "split": the_split}


@pytest.fixture(scope="session")
def small_model(small_dataset, embedder):
    """Tiny regressor trained briefly; enough signal for pipeline tests."""
    model = init(
        ArchitectureConfig(input_dim=64, conv_blocks=((8, 3),), fc_widths=(64,)),
        seed=123,
    )
    config = TrainConfig(epochs=25, batch_size=16, learning_rate=1e-3, shuffle_seed=5, eval_every=25)
    train(model, small_dataset["records"], small_dataset["split"], embedder, config)
    return model


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
