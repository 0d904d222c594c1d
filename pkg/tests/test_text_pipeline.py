import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facegen.descriptor import lexicon
from facegen.errors import BackendUnavailableError, EmptyDescriptionError
from facegen.text_pipeline import (
    FALLBACK_DIMENSION,
    ExternalCommandEmbedder,
    HashedBagEmbedder,
    embed_text,
    lemmatize,
    preprocess,
    stopwords,
)

MAN_WOMAN_COSINE = -0.0147  # frozen from the shipped hash constants


def test_stopword_list_is_the_shipped_forty():
    assert len(stopwords()) == 40


@pytest.mark.parametrize(
    "text,expected",
    [
        ("He is smiling.", ["smile"]),
        ("a young man with short dark hair", ["young", "man", "short", "dark", "hair"]),
        ("her lips are thin", ["lip", "thin"]),
        ("wearing dark shades", ["wear", "dark", "shade"]),
        ("his upper teeth are visible", ["upper", "tooth", "visible"]),
        ("a stubble beard is growing on his face", ["stubble", "beard", "grow", "face"]),
        ("", []),
        ("the a an", []),
    ],
)
def test_preprocess_examples(text, expected):
    assert preprocess(text) == expected


@pytest.mark.parametrize(
    "token,lemma",
    [
        ("smiling", "smile"),
        ("smiles", "smile"),
        ("smiled", "smile"),
        ("running", "run"),
        ("eyes", "eye"),
        ("lips", "lip"),
        ("shades", "shade"),
        ("glasses", "glass"),
        ("sunglasses", "sunglass"),
        ("boxes", "box"),
        ("babies", "baby"),
        ("teeth", "tooth"),
        ("wearing", "wear"),
        ("growing", "grow"),
        ("is", "be"),
        ("has", "have"),
        ("grey", "grey"),
        ("stubble", "stubble"),
    ],
)
def test_lemmatizer_rules(token, lemma):
    assert lemmatize(token) == lemma


def test_preprocess_idempotent_on_caption_style_text():
    text = "an old man with short grey hair and small dark eyes his lips are thin and he is smiling"
    once = preprocess(text)
    assert preprocess(" ".join(once)) == once


@given(st.text(alphabet=st.characters(whitelist_categories=["Ll", "Zs"]), max_size=60))
@settings(max_examples=80)
def test_preprocess_idempotent_property(text):
    once = preprocess(text)
    assert preprocess(" ".join(once)) == once


def test_punctuation_invariance():
    assert preprocess("smiling.") == preprocess("smiling") == ["smile"]


# -- fallback embedder ---------------------------------------------------------


def test_embedding_deterministic(embedder):
    a = embedder.embed(["young", "man", "short", "dark", "hair"])
    b = HashedBagEmbedder().embed(["young", "man", "short", "dark", "hair"])
    assert np.array_equal(a, b)


def test_embedding_unit_norm(embedder):
    for tokens in (["man"], ["old", "woman", "white", "hair"], ["x"] * 7):
        v = embedder.embed(tokens)
        assert v.shape == (FALLBACK_DIMENSION,)
        assert abs(float(np.linalg.norm(v)) - 1.0) <= 1e-6


def test_embedding_bag_of_words(embedder):
    a = embedder.embed(["young", "man", "smile"])
    b = embedder.embed(["smile", "young", "man"])
    assert np.array_equal(a, b)


def test_embedding_multiset_sensitive(embedder):
    a = embedder.embed(["man", "man"])
    b = embedder.embed(["man"])
    # duplicates change the sum but not the normalized direction
    assert np.allclose(a, b, atol=1e-6)
    c = embedder.embed(["man", "smile"])
    assert not np.allclose(a, c, atol=1e-3)


def test_man_woman_nearly_orthogonal(embedder):
    cos = float(np.dot(embedder.embed(["man"]), embedder.embed(["woman"])))
    assert cos < 0.5
    assert cos == pytest.approx(MAN_WOMAN_COSINE, abs=1e-3)


def test_vocabulary_embeddings_distinct(embedder):
    words = sorted({tok for e in lexicon()["entries"] for tok in e["phrase"].split()})
    vectors = np.stack([embedder.embed([w]) for w in words])
    gram = vectors @ vectors.T
    np.fill_diagonal(gram, 0.0)
    assert gram.max() < 0.9  # no collisions across the shipped vocabulary


def test_embed_empty_tokens(embedder):
    with pytest.raises(EmptyDescriptionError):
        embedder.embed([])


def test_embed_text_composition(embedder):
    direct = embedder.embed(preprocess("he is smiling"))
    assert np.array_equal(embed_text("he is smiling", embedder), direct)
    assert np.array_equal(embed_text("smiling", embedder), direct)


def test_embed_text_all_stopwords(embedder):
    with pytest.raises(EmptyDescriptionError):
        embed_text("a a the the", embedder)


def test_embedder_info(embedder):
    info = embedder.info
    assert info.dimension == 64
    assert info.deterministic


# -- external adapter ----------------------------------------------------------


def test_external_embedder_protocol():
    cmd = [
        "python3",
        "-c",
        "import sys, json\n"
        "for line in sys.stdin:\n"
        "    n = len(line.split())\n"
        "    print(json.dumps([float(n)] * 768), flush=True)\n",
    ]
    embedder = ExternalCommandEmbedder(cmd)
    v = embedder.embed(["old", "man"])
    assert v.shape == (768,)
    assert v[0] == 2.0
    assert embedder.info.dimension == 768


def test_external_embedder_missing_command():
    embedder = ExternalCommandEmbedder(["/nonexistent/encoder-binary"])
    with pytest.raises(BackendUnavailableError):
        embedder.embed(["man"])


def test_external_embedder_wrong_dimension():
    embedder = ExternalCommandEmbedder(
        ["python3", "-c", "import sys\nfor l in sys.stdin: print('[1.0, 2.0]', flush=True)"]
    )
    with pytest.raises(BackendUnavailableError):
        embedder.embed(["man"])
