from swirlring.errors import ConfigError
from swirlring.helpers import get_recent_runs, get_recent_sweeps, get_status_counts, record_run_start
from swirlring.models import Run, Sweep, db
from swirlring.variational import SolverParams


def test_record_and_finish_run(app):
    with app.app_context():
        run = record_run_start(db, Run, 'tube beta 0.01', 'solve', SolverParams(beta=0.01, W=0.1), 'cylinder')
        assert run.id is not None
        assert run.status == 'running'
        run.mark_finished('failed', error=ConfigError('params.beta', 'out of range'))
        db.session.commit()
        data = db.session.get(Run, run.id).to_dict()
        assert data['status'] == 'failed'
        assert data['error_code'] == 'config'
        assert data['error_message'] == 'params.beta: out of range'
        assert data['finished_at'] is not None


def test_status_counts_and_filters(app):
    with app.app_context():
        params = SolverParams(beta=0.01, W=0.1)
        record_run_start(db, Run, 'a', 'solve', params, 'cylinder')
        b = record_run_start(db, Run, 'b', 'solve', params, 'whole_space')
        b.status = 'converged'
        db.session.commit()
        counts = get_status_counts(db, Run)
        assert counts['running'] == 1
        assert counts['converged'] == 1
        assert counts['failed'] == 0
        assert [run.label for run in get_recent_runs(Run, domain_kind='cylinder')] == ['a']
        assert [run.label for run in get_recent_runs(Run, limit=1)] == ['b']


def test_sweep_with_runs(app):
    with app.app_context():
        sweep = Sweep(label='whole space sweep', domain_kind='whole_space', betas='0.01,0.003,0.001', W=0.1)
        db.session.add(sweep)
        db.session.commit()
        record_run_start(db, Run, 'member', 'sweep', SolverParams(beta=0.003, W=0.1), 'whole_space',
                         sweep_id=sweep.id)
        data = get_recent_sweeps(Sweep)[0].to_dict()
        assert data['betas'] == [0.01, 0.003, 0.001]
        assert data['run_count'] == 1
        assert data['status'] == 'pending'
