import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geacarbon.errors import DataError
from geacarbon.text_index import (
    AttentionIndex,
    Corpus,
    Document,
    KeywordDictionary,
    PresegmentedSegmenter,
    WhitespaceSegmenter,
    WindowSegmenter,
    aggregate_index,
    count_keywords,
    gea_index,
    index_corpus,
    load_corpus,
    make_segmenter,
    read_index_csv,
    total_tokens,
    write_index_csv,
)

WS = WhitespaceSegmenter()


@pytest.fixture
def small_dict():
    return KeywordDictionary.from_mapping({"env": ["环保", "生态"], "pollution": ["减排", "PM2.5"]})


def test_default_dictionary_has_three_dimensions_and_seventeen_keywords():
    d = KeywordDictionary.default()
    assert len(d.dimensions) == 3
    assert len(d.keywords) == 17
    assert "绿水青山" in d.keywords and "PM2.5" in d.keywords


def test_parse_and_dumps_round_trip(small_dict):
    again = KeywordDictionary.parse(small_dict.dumps())
    assert again == small_dict


def test_parse_ignores_comments_and_blank_lines():
    d = KeywordDictionary.parse("# note\n\n[a]\nx\n# another\ny\n")
    assert d.keywords == ["x", "y"]


def test_keyword_before_header_rejected():
    with pytest.raises(DataError):
        KeywordDictionary.parse("x\n[a]\ny\n")


def test_duplicate_keyword_across_dimensions_rejected():
    with pytest.raises(DataError):
        KeywordDictionary.from_mapping({"a": ["生态"], "b": ["生态"]})


def test_latin_duplicates_compare_case_insensitively():
    with pytest.raises(DataError):
        KeywordDictionary.from_mapping({"a": ["PM2.5"], "b": ["pm2.5"]})


def test_empty_dimension_rejected():
    with pytest.raises(DataError):
        KeywordDictionary.from_mapping({"a": []})


def test_with_keyword_adds_to_existing_and_new_dimension(small_dict):
    d = small_dict.with_keyword("env", "绿化").with_keyword("new", "低碳")
    assert d.dimension_of("绿化") == "env"
    assert d.dimension_of("低碳") == "new"
    assert small_dict.keywords == ["环保", "生态", "减排", "PM2.5"]  # unchanged


def test_substring_counts_by_hand(small_dict):
    text = "推进环保工作。加强生态建设，生态优先！减排目标 pm2.5 下降"
    c = count_keywords(text, small_dict)
    assert c.per_keyword == {"环保": 1, "生态": 2, "减排": 1, "PM2.5": 1}
    assert c.per_dimension == {"env": 3, "pollution": 2}
    assert c.total_hits == 5


def test_longest_keyword_wins_and_matches_do_not_overlap():
    d = KeywordDictionary.from_mapping({"a": ["环境", "环境治理"], "b": ["治理"]})
    c = count_keywords("环境治理 环境 治理", d)
    assert c.per_keyword == {"环境": 1, "环境治理": 1, "治理": 1}


def test_token_mode_counts_exact_tokens_only(small_dict):
    text = "环保 环保工作 生态 减排"
    c = count_keywords(text, small_dict, mode="token", segmenter=WS)
    assert c.per_keyword == {"环保": 1, "生态": 1, "减排": 1, "PM2.5": 0}


def test_token_mode_needs_segmenter(small_dict):
    with pytest.raises(ValueError):
        count_keywords("x", small_dict, mode="token")


def test_total_tokens_excludes_punctuation_tokens():
    assert total_tokens("我们 推进 。 环保 ， 工作 ！", WS) == 4


def test_empty_document_rejected():
    with pytest.raises(DataError):
        Document("a", 2010, "")
    with pytest.raises(DataError):
        total_tokens("。 ，", WS)


def test_window_segmenter_splits_runs_at_punctuation():
    seg = WindowSegmenter(2)
    assert seg.tokens("环境保护。生态文明建设") == ["环境", "保护", "生态", "文明", "建设"]
    assert WindowSegmenter(3).tokens("abcdefg h") == ["abc", "def", "g", "h"]


def test_presegmented_reads_one_token_per_line():
    assert PresegmentedSegmenter().tokens("环保\n\n 生态 \n减排\n") == ["环保", "生态", "减排"]


def test_make_segmenter_rejects_unknown():
    assert isinstance(make_segmenter("window", 3), WindowSegmenter)
    with pytest.raises(ValueError):
        make_segmenter("jieba")


def test_gea_index_zero_tokens_rejected(small_dict):
    with pytest.raises(DataError):
        gea_index(count_keywords("环保", small_dict), 0)


# A hand-built corpus: document i has h_i keyword hits among n_i word tokens.
HAND = [
    ("anhui", 2010, ["环保"] * 2 + ["工作"] * 98),
    ("anhui", 2011, ["生态"] * 5 + ["工作"] * 195),
    ("anhui", 2012, ["减排", "PM2.5"] + ["工作"] * 48),
    ("beijing", 2010, ["工作"] * 40),
    ("beijing", 2011, ["环保", "生态", "减排"] + ["工作"] * 297),
    ("beijing", 2012, ["pm2.5"] * 4 + ["工作"] * 396),
    ("fujian", 2010, ["生态"] * 10 + ["工作"] * 990),
    ("fujian", 2011, ["环保"] * 7 + ["工作"] * 693),
    ("fujian", 2012, ["减排"] * 1 + ["工作"] * 9),
    ("gansu", 2010, ["环保", "减排"] * 3 + ["工作"] * 594),
    ("gansu", 2011, ["生态"] * 12 + ["工作"] * 588),
    ("gansu", 2012, ["环保"] * 9 + ["工作"] * 291),
]


def _hand_corpus():
    return Corpus(tuple(Document(r, y, " ".join(toks) + " 。") for r, y, toks in HAND))


def test_hand_corpus_percent_index_is_exact(small_dict):
    got = index_corpus(_hand_corpus(), small_dict, WS)
    expected = [
        2 / 100 * 100, 5 / 200 * 100, 2 / 50 * 100, 0.0, 3 / 300 * 100, 4 / 400 * 100,
        10 / 1000 * 100, 7 / 700 * 100, 1 / 10 * 100, 6 / 600 * 100, 12 / 600 * 100,
        9 / 300 * 100,
    ]
    assert [ix.gea for ix in got] == expected
    assert [ix.total_tokens for ix in got] == [len(t) for _, _, t in HAND]


def test_hand_corpus_count_variant(small_dict):
    got = index_corpus(_hand_corpus(), small_dict, WS, variant="count")
    assert [ix.gea for ix in got] == [2, 5, 2, 0, 3, 4, 10, 7, 1, 6, 12, 9]


def test_aggregate_by_year_and_region(small_dict):
    got = index_corpus(_hand_corpus(), small_dict, WS)
    by_year = dict(aggregate_index(got, "year"))
    np.testing.assert_allclose(by_year[2010], (2.0 + 0.0 + 1.0 + 1.0) / 4)
    by_region = dict(aggregate_index(got, "region"))
    np.testing.assert_allclose(by_region["fujian"], (1.0 + 1.0 + 10.0) / 3)
    with pytest.raises(DataError):
        aggregate_index(got + index_corpus(_hand_corpus(), small_dict, WS, "count"), "year")


WORDS = st.sampled_from(["环保", "生态", "减排", "PM2.5", "工作", "发展", "经济", "。", "，"])


@settings(max_examples=100, deadline=None)
@given(st.lists(WORDS, min_size=1, max_size=200).filter(lambda w: any(x not in "。，" for x in w)))
def test_percent_index_invariant_under_duplication(words):
    d = KeywordDictionary.from_mapping({"env": ["环保", "生态"], "pollution": ["减排", "PM2.5"]})
    text = " ".join(words)
    once = gea_index(count_keywords(text, d), total_tokens(text, WS))
    doubled = text + "\n" + text
    twice = gea_index(count_keywords(doubled, d), total_tokens(doubled, WS))
    assert twice.gea == pytest.approx(once.gea, rel=1e-12)
    assert twice.total_tokens == 2 * once.total_tokens


@settings(max_examples=50, deadline=None)
@given(st.lists(WORDS, min_size=1, max_size=100).filter(lambda w: any(x not in "。，" for x in w)),
       st.sampled_from(["低碳", "绿化"]))
def test_adding_keyword_never_decreases_count(words, extra):
    d = KeywordDictionary.from_mapping({"env": ["环保", "生态"], "pollution": ["减排"]})
    text = " ".join(words + [extra])
    before = count_keywords(text, d).total_hits
    after = count_keywords(text, d.with_keyword("env", extra)).total_hits
    assert after >= before


def test_load_corpus_reads_files_sorted(tmp_path):
    (tmp_path / "beijing_2011.txt").write_text("环保 工作", encoding="utf-8")
    (tmp_path / "anhui_2010.txt").write_text("生态", encoding="utf-8")
    c = load_corpus(tmp_path)
    assert [(d.region_id, d.year) for d in c] == [("anhui", 2010), ("beijing", 2011)]
    assert c.get("beijing", 2011).text == "环保 工作"


def test_load_corpus_rejects_bad_names_and_years(tmp_path):
    (tmp_path / "notes.txt").write_text("x", encoding="utf-8")
    with pytest.raises(DataError):
        load_corpus(tmp_path)
    (tmp_path / "notes.txt").unlink()
    (tmp_path / "anhui_1999.txt").write_text("x", encoding="utf-8")
    with pytest.raises(DataError):
        load_corpus(tmp_path, years=(2007, 2019))


def test_load_corpus_missing_and_empty_directory(tmp_path):
    with pytest.raises(DataError):
        load_corpus(tmp_path / "nope")
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert len(load_corpus(tmp_path)) == 0
    assert w


def test_index_csv_round_trip(tmp_path):
    rows = [AttentionIndex("anhui", 2010, 0.1 + 0.2, "percent", 120),
            AttentionIndex("beijing", 2011, 3.0, "percent", 77)]
    write_index_csv(rows, tmp_path / "ix.csv")
    assert read_index_csv(tmp_path / "ix.csv") == rows
