"""
Ledger queries shared by the commands.
"""
import logging
from sqlalchemy import func

logger = logging.getLogger(__name__)


def get_status_counts(db, Run):
    """
    Get run counts grouped by status in a single query.
    Used by: history
    """
    results = db.session.query(
        Run.status, func.count(Run.id)
    ).group_by(Run.status).all()

    counts = {status: count for status, count in results}
    return {
        'pending': counts.get('pending', 0),
        'running': counts.get('running', 0),
        'converged': counts.get('converged', 0),
        'not_converged': counts.get('not_converged', 0),
        'failed': counts.get('failed', 0)
    }


def get_recent_runs(Run, limit=20, domain_kind=None):
    """
    Most recent runs first, optionally for one domain kind.
    Used by: history
    """
    query = Run.query
    if domain_kind:
        query = query.filter_by(domain_kind=domain_kind)
    return query.order_by(Run.started_at.desc(), Run.id.desc()).limit(limit).all()


def get_recent_sweeps(Sweep, limit=10):
    """
    Used by: history
    """
    return Sweep.query.order_by(Sweep.created_at.desc(), Sweep.id.desc()).limit(limit).all()


def record_run_start(db, Run, label, command, params, domain_kind, sweep_id=None):
    """
    Insert a run row in 'running' state.
    Used by: solve, sweep
    """
    run = Run(label=label, command=command, domain_kind=domain_kind, beta=params.beta,
              W=params.W, alpha=params.alpha, status='running', sweep_id=sweep_id)
    db.session.add(run)
    db.session.commit()
    return run
