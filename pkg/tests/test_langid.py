"""Language identification checked against a naive reference implementation."""

import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from profilewatch.langid import (
    LanguageIdentifier,
    bundled_corpus_dir,
    detect_language,
    load_or_train,
    train_language_profiles,
)

from conftest import DE_TEXT, EN_TEXT


def _words(text):
    out, cur = [], ""
    text = text.lower()
    for i, ch in enumerate(text):
        if ch.isalpha():
            cur += ch
        elif ch == "'" and cur and i + 1 < len(text) and text[i + 1].isalpha():
            cur += ch
        else:
            if cur:
                out.append(cur)
            cur = ""
    if cur:
        out.append(cur)
    return out


def _ranked(text, top=400):
    counts = {}
    for w in _words(text):
        p = "_" + w + "_"
        for n in range(1, 6):
            for i in range(len(p) - n + 1):
                counts[p[i : i + n]] = counts.get(p[i : i + n], 0) + 1
    return [g for g, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))][:top]


def _clean(text):
    text = re.sub(r"https?://\S+", " ", text, flags=re.I)
    text = re.sub(r"[@#][A-Za-z0-9_]+", " ", text)
    return " ".join(text.split())


def reference_detect(text, corpora):
    text = _clean(text)
    if len(text) < 20:
        return "und"
    doc = _ranked(text)
    best = None
    for lang in sorted(corpora):
        prof = corpora[lang]
        d = sum(abs(r - prof.index(g)) if g in prof else 400 for r, g in enumerate(doc))
        if best is None or d < best[0]:
            best = (d, lang)
    return best[1]


@pytest.fixture(scope="module")
def reference_profiles():
    return {
        p.stem: _ranked(p.read_text(encoding="utf-8"))
        for p in sorted(bundled_corpus_dir().glob("*.txt"))
    }


SENTENCES = {
    EN_TEXT: "en",
    DE_TEXT: "de",
    "El perro marrón corre por el parque todas las mañanas con su dueño": "es",
    "Le chat noir dort tranquillement sur le canapé pendant que nous mangeons": "fr",
    "Il treno per Milano è arrivato in ritardo anche questa mattina": "it",
    "O comboio chegou atrasado outra vez e não havia lugares para sentar": "pt",
    "De trein naar Utrecht had vanochtend weer vertraging door het weer": "nl",
}


@pytest.mark.parametrize("text, lang", SENTENCES.items())
def test_reference_sentences(text, lang, reference_profiles):
    assert reference_detect(text, reference_profiles) == lang
    assert detect_language(text) == lang


def test_short_text_is_undetermined():
    assert detect_language("ok") == "und"
    assert detect_language("@bob #nfl http://x.com/abc") == "und"


def test_hint_overrides_detection():
    assert detect_language(EN_TEXT, hint="de") == "de"


def test_matches_reference_on_corpus_samples(reference_profiles):
    rng = random.Random(5)
    ident = LanguageIdentifier.from_corpus_dir(bundled_corpus_dir())
    for path in sorted(bundled_corpus_dir().glob("*.txt")):
        words = path.read_text(encoding="utf-8").split()
        for _ in range(15):
            k = rng.randint(3, 15)
            start = rng.randrange(len(words) - k)
            text = " ".join(words[start : start + k])
            assert ident.detect(text) == reference_detect(text, reference_profiles), text


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(SENTENCES)), st.text(alphabet="abcdefXYZ0123/", min_size=1, max_size=15))
def test_urls_do_not_change_language(text, path):
    assert detect_language(text) == detect_language(f"{text} https://example.com/{path}")


def test_training_edge_cases(tmp_path):
    (tmp_path / "en.txt").write_text("the cat sat on the mat with the hat", encoding="utf-8")
    (tmp_path / "de.txt").write_text("der hund und die katze", encoding="utf-8")
    assert sorted(train_language_profiles(tmp_path)) == ["de", "en"]

    (tmp_path / "aa.txt").write_text("a" * 50, encoding="utf-8")
    assert train_language_profiles(tmp_path)["aa"].ngrams[0] == "a"

    (tmp_path / "en.txt").write_text("", encoding="utf-8")
    assert sorted(train_language_profiles(tmp_path)) == ["aa", "de"]


def test_profile_ranks_are_contiguous():
    for profile in train_language_profiles(bundled_corpus_dir()).values():
        assert len(profile.ngrams) <= 400
        assert sorted(profile.ranks.values()) == list(range(len(profile.ngrams)))


def test_cache_regenerates_when_corpora_change(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "en.txt").write_text("the cat sat on the mat", encoding="utf-8")
    cache = tmp_path / "cache.json"
    first = load_or_train(corpus, cache)
    assert cache.exists()
    assert load_or_train(corpus, cache) == first
    (corpus / "de.txt").write_text("der hund und die katze", encoding="utf-8")
    assert sorted(load_or_train(corpus, cache)) == ["de", "en"]
