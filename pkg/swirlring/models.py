from flask_sqlalchemy import SQLAlchemy
from datetime import datetime

db = SQLAlchemy()

RUN_STATUSES = ('pending', 'running', 'converged', 'not_converged', 'failed')


class Sweep(db.Model):
    """A family of solves over decreasing beta"""
    __tablename__ = 'sweeps'

    id = db.Column(db.Integer, primary_key=True)
    label = db.Column(db.String(200), nullable=False, index=True)
    domain_kind = db.Column(db.String(20), nullable=False)
    betas = db.Column(db.Text)  # comma-separated, decreasing
    W = db.Column(db.Float)
    alpha = db.Column(db.Float, default=0.0)

    # Status: pending, running, converged (all members), not_converged (some), failed (all)
    status = db.Column(db.String(20), default='pending', index=True)
    output_dir = db.Column(db.String(500))

    # Fits against log(1/beta) and the predictions they are compared with
    mu_slope = db.Column(db.Float)
    E_slope = db.Column(db.Float)
    diam_power = db.Column(db.Float)
    predicted_r_star = db.Column(db.Float)
    predicted_mu_slope = db.Column(db.Float)
    predicted_E_slope = db.Column(db.Float)

    error_message = db.Column(db.Text)
    created_at = db.Column(db.DateTime, default=datetime.utcnow)
    finished_at = db.Column(db.DateTime)

    # Relationships
    runs = db.relationship('Run', backref='sweep', lazy=True, cascade='all, delete-orphan')

    def beta_list(self):
        return [float(b) for b in self.betas.split(',')] if self.betas else []

    def to_dict(self):
        return {
            'id': self.id,
            'label': self.label,
            'domain_kind': self.domain_kind,
            'betas': self.beta_list(),
            'W': self.W,
            'alpha': self.alpha,
            'status': self.status,
            'output_dir': self.output_dir,
            'mu_slope': self.mu_slope,
            'E_slope': self.E_slope,
            'diam_power': self.diam_power,
            'predicted_r_star': self.predicted_r_star,
            'predicted_mu_slope': self.predicted_mu_slope,
            'predicted_E_slope': self.predicted_E_slope,
            'error_message': self.error_message,
            'run_count': len(self.runs),
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'finished_at': self.finished_at.isoformat() if self.finished_at else None
        }


class Run(db.Model):
    """One fixed-point solve"""
    __tablename__ = 'runs'

    id = db.Column(db.Integer, primary_key=True)
    sweep_id = db.Column(db.Integer, db.ForeignKey('sweeps.id'), nullable=True, index=True)
    label = db.Column(db.String(200), nullable=False, index=True)
    command = db.Column(db.String(20), default='solve')  # 'solve', 'sweep'
    domain_kind = db.Column(db.String(20), nullable=False)
    beta = db.Column(db.Float, nullable=False)
    W = db.Column(db.Float, nullable=False)
    alpha = db.Column(db.Float, default=0.0)

    # Status: pending, running, converged, not_converged, failed
    status = db.Column(db.String(20), default='pending', index=True)
    iterations = db.Column(db.Integer)
    mu = db.Column(db.Float)
    energy = db.Column(db.Float)
    circulation = db.Column(db.Float)
    output_dir = db.Column(db.String(500))

    # Error tracking
    error_code = db.Column(db.String(30))
    error_message = db.Column(db.Text)

    started_at = db.Column(db.DateTime, default=datetime.utcnow)
    finished_at = db.Column(db.DateTime)

    def mark_finished(self, status, solution=None, error=None):
        self.status = status
        self.finished_at = datetime.utcnow()
        if solution is not None:
            self.iterations = solution.iterations
            self.mu = solution.mu
            self.energy = solution.energy
            self.circulation = solution.circulation
        if error is not None:
            self.error_code = getattr(error, 'code', 'error')
            self.error_message = str(error)

    def to_dict(self):
        return {
            'id': self.id,
            'sweep_id': self.sweep_id,
            'label': self.label,
            'command': self.command,
            'domain_kind': self.domain_kind,
            'beta': self.beta,
            'W': self.W,
            'alpha': self.alpha,
            'status': self.status,
            'iterations': self.iterations,
            'mu': self.mu,
            'energy': self.energy,
            'circulation': self.circulation,
            'output_dir': self.output_dir,
            'error_code': self.error_code,
            'error_message': self.error_message,
            'started_at': self.started_at.isoformat() if self.started_at else None,
            'finished_at': self.finished_at.isoformat() if self.finished_at else None
        }
