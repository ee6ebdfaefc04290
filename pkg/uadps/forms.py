# coding=utf-8
"""Validation of resolved command configurations.

Every layer (class defaults, config file, flags) contributes strings; the
forms coerce and check them. Field names are the lower-case config keys.
"""
import math

from wtforms import FloatField, Form, IntegerField, StringField
from wtforms.fields import Field
from wtforms.validators import AnyOf, InputRequired, NumberRange, Regexp, \
    ValidationError
from wtforms.widgets import TextInput

NUMBER_LIST = r'^\s*[-+0-9.eE]+(\s*,\s*[-+0-9.eE]+)*\s*$'


class SwitchField(Field):
    widget = TextInput()
    true_values = ('1', 'true', 'yes', 'on')
    false_values = ('0', 'false', 'no', 'off', '')

    def process_formdata(self, valuelist):
        if valuelist:
            value = valuelist[0].strip().lower()
            if value in self.true_values:
                self.data = True
            elif value in self.false_values:
                self.data = False
            else:
                self.data = None
                raise ValueError(self.gettext('Not a valid switch value.'))

    def _value(self):
        return 'true' if self.data else 'false'


def number_list(text):
    return [float(v) for v in text.split(',')]


def _grid(field):
    try:
        return number_list(field.data)
    except ValueError:
        return []


class AnalysisForm(Form):
    fft_size = IntegerField('FFT size', validators=[InputRequired(),
                                                    NumberRange(min=2)])
    hop = IntegerField('Hop', validators=[InputRequired(), NumberRange(min=1)])
    sample_rate = IntegerField('Sample rate',
                               validators=[InputRequired(),
                                           NumberRange(min=1)])
    seed = IntegerField('Seed', validators=[InputRequired(),
                                            NumberRange(min=0)])

    def validate_fft_size(self, field):
        if field.data is None:
            return
        if field.data & (field.data - 1):
            raise ValidationError('FFT size must be a power of two.')

    def validate_hop(self, field):
        if field.data is None:
            return
        if self.fft_size.data and field.data > self.fft_size.data:
            raise ValidationError('Hop must not exceed the FFT size.')


class RefineForm(AnalysisForm):
    diffusion_steps = IntegerField('Diffusion steps',
                                   validators=[InputRequired(),
                                               NumberRange(min=2)])
    beta_start = FloatField('First beta', validators=[
        InputRequired(), NumberRange(min=0, max=1)])
    beta_end = FloatField('Last beta', validators=[
        InputRequired(), NumberRange(min=0, max=1)])
    t_start = IntegerField('Starting step', validators=[InputRequired(),
                                                        NumberRange(min=0)])
    xi = FloatField('Guidance scale', validators=[InputRequired(),
                                                  NumberRange(min=0)])
    alpha = FloatField('Interpolation', validators=[
        InputRequired(), NumberRange(min=0, max=1)])
    eta = FloatField('SCM smoothing', validators=[InputRequired(),
                                                  NumberRange(min=0)])
    gamma = FloatField('FCP weight floor', validators=[InputRequired(),
                                                       NumberRange(min=0)])
    n_taps = IntegerField('FCP taps', validators=[InputRequired(),
                                                  NumberRange(min=1)])
    causal_offset = IntegerField('FCP causal offset',
                                 validators=[InputRequired(),
                                             NumberRange(min=0)])
    align_taps = IntegerField('Alignment taps',
                              validators=[InputRequired(),
                                          NumberRange(min=1)])
    stride = IntegerField('Stride', validators=[InputRequired(),
                                                NumberRange(min=1)])
    grad_mode = StringField('Gradient mode', validators=[
        InputRequired(), AnyOf(['detached', 'vjp'])])
    through_fcp = SwitchField('Differentiate through FCP')
    eps_mag = FloatField('Magnitude clamp', validators=[InputRequired()])
    load_delta = FloatField('Diagonal loading',
                            validators=[InputRequired(), NumberRange(min=0)])
    ridge = FloatField('FCP ridge', validators=[InputRequired(),
                                                NumberRange(min=0)])
    align_ridge = FloatField('Alignment ridge',
                             validators=[InputRequired(), NumberRange(min=0)])
    denoiser = StringField('Denoiser', validators=[
        InputRequired(),
        Regexp(r'^(oracle(:.+)?|gaussian:.+|extern:.+)$',
               message='Expected oracle:<wav>, gaussian:<variance> or '
                       'extern:<command>.')])
    jobs = IntegerField('Jobs', validators=[InputRequired(),
                                            NumberRange(min=1)])

    def validate_beta_end(self, field):
        if field.data is None:
            return
        if self.beta_start.data is not None and \
                not self.beta_start.data < field.data < 1:
            raise ValidationError('Need beta_start < beta_end < 1.')

    def validate_t_start(self, field):
        if field.data is None:
            return
        steps = self.diffusion_steps.data
        if steps and field.data > steps:
            raise ValidationError('Starting step exceeds the diffusion steps.')

    def validate_eta(self, field):
        if field.data is None:
            return
        if not field.data < 1:
            raise ValidationError('SCM smoothing must be below 1.')

    def validate_eps_mag(self, field):
        if field.data is None:
            return
        if not field.data > 0:
            raise ValidationError('Magnitude clamp must be positive.')

    def validate_causal_offset(self, field):
        if field.data is None:
            return
        if self.n_taps.data and field.data >= self.n_taps.data:
            raise ValidationError('Causal offset must be below the taps.')

    def validate_denoiser(self, field):
        if field.data is None:
            return
        kind, _, arg = field.data.partition(':')
        if kind == 'gaussian':
            try:
                variance = float(arg)
            except ValueError:
                raise ValidationError('Prior variance is not a number.')
            if math.isnan(variance) or variance < 0:
                raise ValidationError('Prior variance must be >= 0.')


class SceneForm(AnalysisForm):
    n_channels = IntegerField('Channels', validators=[InputRequired(),
                                                      NumberRange(min=1)])
    n_sources = IntegerField('Sources', validators=[InputRequired(),
                                                    NumberRange(min=1)])
    scene_taps = IntegerField('Scene ATF taps',
                              validators=[InputRequired(),
                                          NumberRange(min=1)])
    noise = StringField('Noise', validators=[
        InputRequired(), AnyOf(['white', 'fixed', 'diffuse'])])
    noise_param = FloatField('Noise parameter',
                             validators=[InputRequired(), NumberRange(min=0)])
    snr_db = FloatField('SNR', validators=[InputRequired()])
    pseudo_sisdr_db = FloatField('Pseudo estimate SI-SDR',
                                 validators=[InputRequired()])
    duration_s = FloatField('Duration', validators=[InputRequired()])

    def validate_snr_db(self, field):
        if field.data is None:
            return
        if math.isnan(field.data) or field.data == -math.inf:
            raise ValidationError('SNR must be finite or inf.')

    def validate_pseudo_sisdr_db(self, field):
        if field.data is None:
            return
        if math.isnan(field.data) or field.data == -math.inf:
            raise ValidationError('SI-SDR must be finite or inf.')

    def validate_duration_s(self, field):
        if field.data is None:
            return
        if not field.data > 0:
            raise ValidationError('Duration must be positive.')


class CheckGradForm(RefineForm, SceneForm):
    probes = IntegerField('Probes', validators=[InputRequired(),
                                                NumberRange(min=1)])
    fd_step = FloatField('Finite difference step',
                         validators=[InputRequired()])
    grad_threshold = FloatField('Threshold', validators=[InputRequired(),
                                                         NumberRange(min=0)])
    check_step = IntegerField('Checked step', validators=[InputRequired(),
                                                          NumberRange(min=1)])

    def validate_fd_step(self, field):
        if field.data is None:
            return
        if not field.data > 0:
            raise ValidationError('Step must be positive.')

    def validate_check_step(self, field):
        if field.data is None:
            return
        steps = self.diffusion_steps.data
        if steps and field.data > steps:
            raise ValidationError('Checked step exceeds the diffusion steps.')


class SweepForm(RefineForm, SceneForm):
    xi_grid = StringField('Guidance grid', validators=[
        InputRequired(), Regexp(NUMBER_LIST)])
    t_grid = StringField('Starting step grid', validators=[
        InputRequired(), Regexp(NUMBER_LIST)])
    alpha_grid = StringField('Interpolation grid', validators=[
        InputRequired(), Regexp(NUMBER_LIST)])

    def validate_xi_grid(self, field):
        if field.data is None:
            return
        if any(not v >= 0 for v in _grid(field)):
            raise ValidationError('Guidance values must be >= 0.')

    def validate_t_grid(self, field):
        if field.data is None:
            return
        for v in _grid(field):
            if not math.isfinite(v) or v != int(v) \
                    or not 0 <= v <= (self.diffusion_steps.data or 0):
                raise ValidationError(
                    'Starting steps must be integers in [0, T].')

    def validate_alpha_grid(self, field):
        if field.data is None:
            return
        if any(not 0 <= v <= 1 for v in _grid(field)):
            raise ValidationError('Interpolation values must be in [0, 1].')
