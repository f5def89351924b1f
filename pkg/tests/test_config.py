import json

import pytest

from src.models.experiment_config import ExperimentConfig, PerturbationSpec, SynthSpec
from src.services.config_service import ConfigService
from src.utils.errors import ConfigError, DataError, error_kind
from src.utils.files import sha256_file


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv('CDR_SEED', raising=False)


class TestExperimentConfig:
    def test_defaults(self):
        config = ConfigService().experiment()
        assert (config.mode, config.alpha, config.beta) == ('cdr', 1.0, 1.0)
        assert config.lm_scope == 'per-conversation'
        assert config.seed == 0
        assert config.perturbation is None

    def test_seed_fallback(self, monkeypatch):
        monkeypatch.setenv('CDR_SEED', '17')
        assert ConfigService().experiment().seed == 17
        assert ConfigService().experiment({'seed': 3}).seed == 3

    def test_bad_seed_env(self, monkeypatch):
        monkeypatch.setenv('CDR_SEED', 'abc')
        with pytest.raises(ConfigError):
            ConfigService().experiment()

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / 'exp.yaml'
        path.write_text('experiment:\n  mode: csf\n  alpha: 0.3\n  models:\n    vocab: v.txt\n',
                        encoding='utf-8')
        config = ConfigService(str(path)).experiment({
            'alpha': None, 'beta': 0.5, 'models': {'vocab': None, 'e2e': 'e.jsonl'}})
        assert (config.mode, config.alpha, config.beta) == ('csf', 0.3, 0.5)
        assert config.models.vocab == 'v.txt'
        assert config.models.e2e == 'e.jsonl'

    def test_json_config(self, tmp_path):
        path = tmp_path / 'exp.json'
        path.write_text(json.dumps({'experiment': {'mode': 'dr', 'beam_width': 3}}), encoding='utf-8')
        config = ConfigService(str(path)).experiment()
        assert config.mode == 'dr' and config.beam_width == 3

    def test_perturbation_seed_follows_experiment(self):
        config = ConfigService().experiment({'seed': 9, 'perturbation': {'kind': 'distractor', 'count': 4}})
        assert config.perturbation == PerturbationSpec(kind='distractor', count=4, seed=9)

    @pytest.mark.parametrize('overrides', [
        {'mode': 'shallow'},
        {'alpha': -0.5},
        {'lm_scope': 'per-speaker'},
        {'mu': 1.5},
        {'beam_width': 0},
        {'perturbation': {'kind': 'adversarial', 'count': 16}},
        {'unknown_key': 1},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            ConfigService().experiment(overrides)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match='not found'):
            ConfigService(str(tmp_path / 'absent.yaml'))

    def test_dict_round_trip(self):
        config = ExperimentConfig(mode='csf', perturbation=PerturbationSpec('distractor', 8, seed=2))
        assert ExperimentConfig.from_dict(config.to_dict()) == config


class TestSynthSpec:
    def test_defaults(self):
        spec = ConfigService().synth()
        assert spec.fraction_with_names == 0.05
        assert spec.rho == 0.15
        assert spec.tag_rho == 0.05

    @pytest.mark.parametrize('overrides', [{'rho': 0.6}, {'fraction_with_names': 1.5},
                                           {'n_conversations': 0}, {'tag_rho': -0.1},
                                           {'variant_rate': 2.0}, {'n_names': 0}])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            ConfigService().synth(overrides)

    def test_section_from_shared_file(self, tmp_path):
        path = tmp_path / 'all.yaml'
        path.write_text('synth:\n  rho: 0.3\nexperiment:\n  mode: sf\n', encoding='utf-8')
        service = ConfigService(str(path))
        assert service.synth().rho == 0.3
        assert service.experiment().mode == 'sf'

    def test_to_dict(self):
        assert SynthSpec(seed=4).to_dict()['seed'] == 4


class TestManifest:
    def test_contents(self, tmp_path):
        data = tmp_path / 'vocab.txt'
        data.write_text('a\n', encoding='utf-8')
        path = ConfigService().write_manifest(tmp_path / 'out.jsonl', {'mode': 'cdr'},
                                              {'vocab': str(data), 'names': None}, seed=5)
        assert path.name == 'out.jsonl.manifest.json'
        manifest = json.loads(path.read_text(encoding='utf-8'))
        assert manifest['config'] == {'mode': 'cdr'}
        assert manifest['seed'] == 5
        assert manifest['inputs'] == {'vocab': {'path': str(data), 'sha256': sha256_file(data)}}
        assert 'revision' in manifest and 'version' in manifest


def test_error_kinds():
    assert error_kind(ConfigError('x')) == 'usage'
    assert error_kind(DataError('x')) == 'data'
    assert error_kind(RuntimeError('x')) == 'internal'
